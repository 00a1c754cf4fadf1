import logging

import plotly.graph_objects as go

logger = logging.getLogger(__name__)


# =========================================================
# 📈 TRAJECTORY CHART
# =========================================================
def trajectory_figure(df, oracle=None, title="Flow trajectory"):
    """
    Area and total energy against time on twin axes, ∫|A°|² dotted.
    `oracle` (optional) is a SphereTrajectory whose exact area is overlaid.
    """
    fig = go.Figure()

    fig.add_trace(go.Scatter(
        x=df["time"], y=df["area"],
        mode="lines+markers", name="Area",
        line=dict(color="#ab47bc", width=3),
    ))
    fig.add_trace(go.Scatter(
        x=df["time"], y=df["energy_total"],
        mode="lines", name="Total energy",
        yaxis="y2", line=dict(color="#66bb6a", width=3),
    ))
    fig.add_trace(go.Scatter(
        x=df["time"], y=df["int_Ao2"],
        mode="lines", name="∫|A°|²",
        yaxis="y2", line=dict(color="#ffa726", width=2, dash="dot"),
    ))

    if oracle is not None:
        T = oracle.extinction_time
        times = df["time"][df["time"] < T].to_numpy()
        fig.add_trace(go.Scatter(
            x=times, y=oracle.area(times),
            mode="lines", name="Sphere oracle area",
            line=dict(color="#29b6f6", width=2, dash="dash"),
        ))

    fig.update_layout(
        title=title,
        height=500,
        hovermode="x unified",
        template="plotly_dark",
        xaxis=dict(title="t"),
        yaxis=dict(title="Area", showgrid=True, gridcolor="#333"),
        yaxis2=dict(title="Energy", overlaying="y", side="right", showgrid=False),
        legend=dict(orientation="h", y=1.1, x=0),
        margin=dict(l=20, r=20, t=80, b=20),
    )
    return fig


def write_trajectory_chart(df, path, oracle=None, title="Flow trajectory"):
    fig = trajectory_figure(df, oracle=oracle, title=title)
    fig.write_html(str(path), include_plotlyjs="cdn")
    logger.info("📊 chart written to %s", path)
    return path
