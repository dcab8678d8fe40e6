import numpy as np
import pytest

from qlattice.asymptotics import classify, compare_asymptotics
from qlattice.coupling import preset
from qlattice.plotting import (FIGURE_FORMATS, band_diagram, comparison_plot, regime_plot,
                               save_figure, trace_plot)
from qlattice.spectrum import ScanConfig, scan_bands

MAGIC = {"png": b"\x89PNG", "pdf": b"%PDF", "svg": b"<?xml"}


@pytest.fixture(scope="module")
def figures():
    c = preset("delta", 1.0, [-2.0])
    rep = scan_bands(c, ScanConfig(k_min=0.2, k_max=8.0), keep_traces=True)
    tr = rep.diagnostics["traces"]
    return {
        "bands": band_diagram(rep),
        "trace": trace_plot(tr["k"], tr["f_min"], tr["f_max"]),
        "regimes": regime_plot(classify(preset("delta", 1.0, [2.0]))),
        "compare": comparison_plot(compare_asymptotics(preset("delta", 1.0, [2.0]), n_range=(5, 9))),
    }


@pytest.mark.parametrize("fmt", FIGURE_FORMATS)
@pytest.mark.parametrize("name", ["bands", "trace", "regimes", "compare"])
def test_every_figure_saves_in_every_format(figures, tmp_path, name, fmt):
    path = save_figure(figures[name], tmp_path / f"{name}.{fmt}")
    data = path.read_bytes()
    assert data.startswith(MAGIC[fmt]) and len(data) > 500


@pytest.mark.parametrize("fmt", FIGURE_FORMATS)
def test_figure_bytes_are_reproducible(figures, tmp_path, fmt):
    a = save_figure(figures["bands"], tmp_path / f"a.{fmt}").read_bytes()
    b = save_figure(figures["bands"], tmp_path / f"b.{fmt}").read_bytes()
    assert a == b


def test_unknown_suffix(figures, tmp_path):
    with pytest.raises(ValueError):
        save_figure(figures["bands"], tmp_path / "x.bmp")


def test_band_diagram_rows(figures):
    ax = figures["bands"].axes[0]
    labels = [t.get_text() for t in ax.get_yticklabels()]
    assert labels and all(labels)


def test_regime_plot_flat_only():
    fig = regime_plot(classify(preset("dirichlet")))
    assert fig.axes


def test_trace_plot_shapes():
    k = np.linspace(1, 2, 5)
    with pytest.raises(ValueError):
        trace_plot(k, np.zeros(4), np.zeros(5))
