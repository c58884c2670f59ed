"""Optional figure output shared by the demos; a no-op without matplotlib."""

from pathlib import Path

OUT = Path(__file__).with_name("figures")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:  # plotting is optional
    plt = None


def save(fig_fn, name):
    if plt is None:
        return None
    OUT.mkdir(exist_ok=True)
    fig = fig_fn(plt)
    path = OUT / f"{name}.png"
    fig.savefig(path, dpi=110, bbox_inches="tight")
    plt.close(fig)
    print(f"figure written to {path}")
    return path
