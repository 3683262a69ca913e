"""
Static figures of scenario results. Figures are plotly objects; files are
SVG when a static image backend is installed, else self-contained HTML.
"""
import logging
from pathlib import Path

import pandas as pd
import plotly.graph_objs as go

logger = logging.getLogger("REPORTS")

colors = {
    "background": "#ffffff",
    "text": "#222222",
    "grid": "#dddddd",
    "compression": "#1f77b4",
    "bending": "#d62728",
    "subpatch": "#999999",
    "rigid": "#2ca02c",
    "ambiguous": "#9467bd",
}
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def _layout(fig: go.Figure, title: str, xaxis: str, yaxis: str, log_x: bool = False, log_y: bool = False) -> go.Figure:
    fig.update_layout(
        title=title,
        paper_bgcolor=colors["background"],
        plot_bgcolor=colors["background"],
        font=dict(color=colors["text"], family="Helvetica"),
        xaxis=dict(title=xaxis, gridcolor=colors["grid"], type="log" if log_x else "linear"),
        yaxis=dict(title=yaxis, gridcolor=colors["grid"], type="log" if log_y else "linear"),
        margin=dict(l=60, r=20, t=50, b=50),
    )
    return fig


def trajectory_figure(frame: pd.DataFrame, snapshots: int = 5) -> go.Figure:
    """Cross-beam means along the beam at a few evenly spaced times."""
    fig = go.Figure()
    times = frame["t"].unique()
    picks = times[:: max(1, len(times) // snapshots)][:snapshots]
    for n, t in enumerate(picks):
        rows = frame[frame["t"] == t]
        color = PALETTE[n % len(PALETTE)]
        for patch, group in rows.groupby("patch"):
            fig.add_trace(go.Scatter(x=group["x"], y=group["ubar"], mode="lines", line=dict(color=color, width=2),
                                     name=f"ubar t={t:g}", legendgroup=f"u{n}", showlegend=patch == 0))
            fig.add_trace(go.Scatter(x=group["x"], y=group["vbar"], mode="lines",
                                     line=dict(color=color, width=2, dash="dash"),
                                     name=f"vbar t={t:g}", legendgroup=f"v{n}", showlegend=patch == 0))
    return _layout(fig, "Cross-beam mean displacements", "x", "mean displacement")


def modes_figure(frame: pd.DataFrame) -> go.Figure:
    fig = go.Figure()
    for branch in ("compression", "bending"):
        fig.add_trace(go.Scatter(x=frame["t"], y=frame[branch], mode="lines", name=branch,
                                 line=dict(color=colors[branch], width=2)))
    return _layout(fig, "Macroscale mode amplitudes", "t", "amplitude")


def spectrum_figure(frame: pd.DataFrame) -> go.Figure:
    fig = go.Figure()
    labels = frame["branch"].where(frame["branch"] != "", frame["class"])
    for label, group in frame.groupby(labels, sort=True):
        fig.add_trace(go.Scatter(x=group["re"], y=group["im"], mode="markers", name=label,
                                 marker=dict(color=colors.get(label, colors["subpatch"]), size=5)))
    return _layout(fig, "Jacobian eigenvalues", "Re", "Im")


def inclusion_figure(frame: pd.DataFrame) -> go.Figure:
    fig = go.Figure()
    for branch in ("compression", "bending"):
        fig.add_trace(go.Scatter(x=frame["E_in"], y=frame[f"{branch}_im"], mode="lines+markers",
                                 name=f"{branch} Im", line=dict(color=colors[branch], width=2)))
        fig.add_trace(go.Scatter(x=frame["E_in"], y=-frame[f"{branch}_re"], mode="lines+markers",
                                 name=f"{branch} -Re", line=dict(color=colors[branch], width=2, dash="dot")))
    return _layout(fig, "Leading macroscale eigenvalues against inclusion stiffness", "E_in", "value",
                   log_x=True, log_y=True)


def convergence_figure(frame: pd.DataFrame) -> go.Figure:
    fig = go.Figure()
    if frame.empty:
        return _layout(fig, "Polynomial coupling error", "N", "relative error", True, True)
    for n, ((kind, branch, order), group) in enumerate(frame.groupby(["material", "branch", "order"], sort=True)):
        fig.add_trace(go.Scatter(
            x=group["patches"], y=group["rel_error"], mode="lines+markers",
            name=f"{kind} {branch} P={order}",
            line=dict(color=PALETTE[n % len(PALETTE)], dash="solid" if branch == "compression" else "dash"),
        ))
    return _layout(fig, "Polynomial coupling error", "N", "relative error", log_x=True, log_y=True)


def error_figure(frame: pd.DataFrame) -> go.Figure:
    fig = go.Figure()
    for n, (order, group) in enumerate(frame.groupby("order", sort=True)):
        fig.add_trace(go.Scatter(x=group["patches"], y=group["error"], mode="lines+markers", name=f"P={order}",
                                 line=dict(color=PALETTE[n % len(PALETTE)], width=2)))
    return _layout(fig, "Equilibrium error against the full-domain solution", "N", "relative error",
                   log_x=True, log_y=True)


def deflection_figure(patches: pd.DataFrame | None, reference: pd.DataFrame | None) -> go.Figure:
    fig = go.Figure()
    if reference is not None:
        fig.add_trace(go.Scatter(x=reference["x"], y=reference["vbar"], mode="lines", name="full domain",
                                 line=dict(color=colors["subpatch"], width=1)))
    if patches is not None:
        for patch, group in patches.groupby("patch"):
            fig.add_trace(go.Scatter(x=group["x"], y=group["vbar"], mode="lines+markers", name="patches",
                                     legendgroup="patches", showlegend=patch == 0,
                                     line=dict(color=colors["bending"], width=2), marker=dict(size=4)))
    return _layout(fig, "Mean lateral deflection", "x", "vbar")


def write_figure(fig: go.Figure, stem: str | Path) -> Path | None:
    """Writes stem.svg, falling back to stem.html; logs and returns None on failure."""
    stem = Path(stem)
    try:
        try:
            path = stem.with_suffix(".svg")
            fig.write_image(path, format="svg")
        except Exception as e:
            logger.warning(f"Static export unavailable ({e}); writing HTML instead")
            path = stem.with_suffix(".html")
            fig.write_html(path, include_plotlyjs=True)
        return path
    except Exception as e:
        logger.error(f"Failed to write figure {stem.name}: {e}")
        return None
