"""
Views Layer - Output formatting and presentation
"""
from .json_view import JSONView
from .table_view import TableView
from .plot_view import PlotView

__all__ = [
    'JSONView',
    'TableView',
    'PlotView'
]
