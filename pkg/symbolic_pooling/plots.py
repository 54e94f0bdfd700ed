"""
Plotly figures for retrieval reports.
"""

from typing import Mapping

import numpy as np
import plotly.graph_objects as go
from plotly.subplots import make_subplots

from .experiment import PipelineRun
from .retrieval import EvalReport


def cmc_figure(reports: Mapping[str, EvalReport], title: str = "CMC") -> go.Figure:
    """One CMC curve per named report"""
    fig = go.Figure()
    for name, report in reports.items():
        ranks = [k for k, _ in report.cmc]
        rates = [rate for _, rate in report.cmc]
        label = name if report.map is None else f"{name} (mAP {report.map:.3f})"
        fig.add_trace(go.Scatter(x=ranks, y=rates, mode="lines+markers", name=label))

    fig.update_layout(
        title=title,
        xaxis_title="Rank",
        yaxis_title="Identification rate",
        yaxis_range=[0, 1.02],
        template="plotly_white",
        hovermode="x unified",
    )
    return fig


def score_cdf_figure(runs: Mapping[str, PipelineRun]) -> go.Figure:
    """Genuine and impostor distance ECDFs, one column per pipeline"""
    fig = make_subplots(rows=1, cols=len(runs), subplot_titles=list(runs.keys()))
    for col, run in enumerate(runs.values(), start=1):
        genuine = np.equal.outer(np.asarray(run.query_ids, dtype=object), np.asarray(run.gallery_ids, dtype=object))
        for flag, label in ((True, "genuine"), (False, "impostor")):
            scores = np.sort(run.distances.data[genuine == flag])
            if scores.size == 0:
                continue
            fig.add_trace(
                go.Scatter(
                    x=scores,
                    y=np.arange(1, scores.size + 1) / scores.size,
                    mode="lines",
                    line_shape="hv",
                    name=f"{run.name} {label}",
                ),
                row=1,
                col=col,
            )
    fig.update_layout(title="Score distributions", template="plotly_white")
    return fig
