from .figures import (
    KINDS,
    EmptyInputError,
    FigureSpec,
    PlotError,
    SchemaError,
    build_figure,
    render,
)

__version__ = "0.1.0"
