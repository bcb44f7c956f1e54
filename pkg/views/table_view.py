"""
Table View - Format numeric series as CSV text
"""
import csv
import io
from typing import Iterable, List, Sequence

from models.experiment import CurvePoint
from models.field import FieldSample
from models.operator import Spectrum

CURVE_HEADER = ['s', 'empirical_p', 'ci_low', 'ci_high', 'bound_h']


def fmt(value: float) -> str:
    """Round-trip float formatting"""
    return format(float(value), '.17g')


class TableView:
    """
    Format CSV tables; floats use a fixed round-trip format so that equal
    inputs give byte-identical files
    """

    @staticmethod
    def render(header: Sequence[str], rows: Iterable[Sequence]) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, (int, str)) else fmt(v) for v in row])
        return buf.getvalue()

    @staticmethod
    def curve(points: List[CurvePoint]) -> str:
        return TableView.render(CURVE_HEADER, (p.as_row() for p in points))

    @staticmethod
    def spectrum(spec: Spectrum) -> str:
        return TableView.render(['index', 'eigenvalue'], spec.to_rows())

    @staticmethod
    def field(sample: FieldSample) -> str:
        d = len(sample.sites[0]) if sample.sites else 0
        header = [f'x{i + 1}' for i in range(d)] + ['value']
        rows = ([int(c) for c in row[:-1]] + [row[-1]] for row in sample.to_rows())
        return TableView.render(header, rows)

    @staticmethod
    def t_scan(scan: List[dict]) -> str:
        return TableView.render(['t', 'distance', 'slope'],
                                ([row['t'], row['distance'], row['slope']] for row in scan))
