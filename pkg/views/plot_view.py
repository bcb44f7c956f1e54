"""
Plot View - Render empirical CDF against its bound curve as SVG
"""
import io

import matplotlib
matplotlib.use('Agg')
import numpy as np
from matplotlib import rcParams
from matplotlib.figure import Figure

from models.experiment import ExperimentResult

# stable element ids so that identical runs give identical files
rcParams['svg.hashsalt'] = 'mpres'


class PlotView:
    """
    Log-log plot of P[dist <= s] with Wilson band and the reference curve
    """

    @staticmethod
    def result_svg(result: ExperimentResult) -> bytes:
        s = np.array([p.s for p in result.points])
        p = np.array([p.empirical_p for p in result.points])
        lo = np.array([p.ci_low for p in result.points])
        hi = np.array([p.ci_high for p in result.points])
        h = np.array([p.bound_h for p in result.points])

        fig = Figure(figsize=(6.4, 4.8))
        ax = fig.add_subplot(1, 1, 1)
        ax.set_xscale('log')
        ax.set_yscale('log')

        # zeros have no place on a log axis
        shown = p > 0
        ax.fill_between(s, np.maximum(lo, 1e-12), hi, alpha=0.25, label='Wilson 95%')
        ax.plot(s[shown], p[shown], 'o-', label='empirical P[dist <= s]')
        positive = h > 0
        label = f"{result.curve.label} bound" + (' (fitted)' if result.curve.fitted else '')
        ax.plot(s[positive], h[positive], '--', label=label)

        ax.set_xlabel('s')
        ax.set_ylabel('probability')
        ax.set_title(f"{result.experiment}: {result.cdf.count} trials")
        ax.legend(loc='best')
        fig.tight_layout()

        buf = io.BytesIO()
        fig.savefig(buf, format='svg', metadata={'Date': None})
        return buf.getvalue()
