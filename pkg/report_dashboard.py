#!/usr/bin/env python3
"""
Retrieval Report Dashboard
Streamlit viewer for evaluation reports written by the pipeline or `eval --out`
"""

import os
from pathlib import Path

import pandas as pd
import plotly.graph_objects as go
import streamlit as st

from symbolic_pooling.errors import SymbolicPoolingError
from symbolic_pooling.feature_io import load_report
from symbolic_pooling.plots import cmc_figure

# Page configuration
st.set_page_config(
    page_title="Retrieval Report Dashboard",
    page_icon="🎯",
    layout="wide",
    initial_sidebar_state="expanded",
)


class ReportDashboard:
    def __init__(self, report_dir: str):
        self.report_dir = Path(report_dir)

    def find_reports(self):
        """All report JSON files under the report directory"""
        if not self.report_dir.is_dir():
            return []
        return sorted(self.report_dir.rglob("*.json"))

    def load(self, paths):
        reports = {}
        for path in paths:
            try:
                reports[str(path.relative_to(self.report_dir))] = load_report(path)
            except (SymbolicPoolingError, ValueError, OSError) as e:
                st.error(f"Could not read {path}: {str(e)}")
        return reports

    def first_hit_histogram(self, report, name):
        """Where each query found its first relevant gallery item"""
        hits = [r.first_hit for r in report.per_query if r.first_hit is not None]
        fig = go.Figure(go.Histogram(x=hits, nbinsx=max(hits, default=1)))
        fig.update_layout(
            title=f"{name}: first relevant position",
            xaxis_title="Position",
            yaxis_title="Queries",
            template="plotly_white",
        )
        return fig

    def query_table(self, report):
        rows = []
        for q, result in enumerate(report.per_query):
            top = result.ranked_gallery[0] if result.ranked_gallery else None
            rows.append(
                {
                    "query": q,
                    "identity": result.query_id,
                    "relevant": result.relevant_count,
                    "first_hit": result.first_hit,
                    "top_identity": top.identity if top else None,
                    "top_distance": top.distance if top else None,
                }
            )
        return pd.DataFrame(rows)


def main():
    st.title("🎯 Retrieval Report Dashboard")

    st.sidebar.header("🎛️ Dashboard Controls")
    report_dir = st.sidebar.text_input("Report directory", os.getenv("SYMPOOL_REPORT_DIR", "output"))
    dashboard = ReportDashboard(report_dir)

    paths = dashboard.find_reports()
    if not paths:
        st.warning(f"No report JSON files found under {report_dir}")
        return

    labels = [str(p.relative_to(dashboard.report_dir)) for p in paths]
    chosen = st.sidebar.multiselect("Reports", labels, default=labels[:1])
    reports = dashboard.load([dashboard.report_dir / label for label in chosen])
    if not reports:
        st.info("Select at least one report")
        return

    summary = pd.concat([r.summary_frame().assign(report=name) for name, r in reports.items()], ignore_index=True)
    st.subheader("📊 Summary")
    st.dataframe(summary.set_index("report"), use_container_width=True)

    st.subheader("📈 CMC")
    st.plotly_chart(cmc_figure(reports), use_container_width=True)

    name = st.sidebar.selectbox("Inspect report", list(reports.keys()))
    report = reports[name]

    col1, col2, col3 = st.columns(3)
    with col1:
        st.metric("Queries", len(report.per_query))
    with col2:
        st.metric("Rank-1", f"{report.cmc[0][1]:.2%}" if report.cmc else "n/a")
    with col3:
        st.metric("mAP", f"{report.map:.2%}" if report.map is not None else "n/a")

    st.plotly_chart(dashboard.first_hit_histogram(report, name), use_container_width=True)

    st.subheader("📋 Queries")
    st.dataframe(dashboard.query_table(report), use_container_width=True)


if __name__ == "__main__":
    main()
