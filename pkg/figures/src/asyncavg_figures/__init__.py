"""Figure rendering for asyncavg simulation outputs."""

from .render import PanelDataError, PanelResult, PanelSpec, expected_panels, render_figures

__version__ = "0.1.0"
