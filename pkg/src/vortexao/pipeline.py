"""End-to-end adaptive-optics loop: distort, predict, conjugate, compensate.

The compensation screen is the negated prediction, applied at the receiver
plane where the distorted field was recorded. Because that field propagated
a short leg past the screen, even ground-truth conjugation at the receiver
is slightly imperfect; the perfect-knowledge bound is therefore computed
with compensation at the screen plane (which restores the beam exactly)
and the receiver-plane ground-truth figure is reported separately.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dataset import Manifest, Sample, decode_screen, synthesize_fields
from .errors import ConfigError
from .field import ComplexField, PhaseScreen, apply_phase
from .metrics import ReportRow, mode_purity, oam_decompose, psnr
from .network import DiffractiveNetwork, encode_input, forward, load_checkpoint

# a predictor maps a distorted intensity image to an image in [0, 1]
Predictor = Callable[[Sample], np.ndarray]


def conjugate_screen(pred: PhaseScreen) -> PhaseScreen:
    """Pointwise negation; a piston-free screen stays piston-free."""
    return PhaseScreen(pred.grid, -pred.phase)


def compensate(distorted_field: ComplexField, comp: PhaseScreen) -> ComplexField:
    """Apply a compensation screen to a field at the receiver plane."""
    return apply_phase(distorted_field, comp)


def network_predictor(net: DiffractiveNetwork) -> Predictor:
    """Prediction through a trained network's forward pass."""

    def predict(sample: Sample) -> np.ndarray:
        output, _ = forward(net, encode_input(sample.distorted_img, net.grid))
        return output

    return predict


def oracle_predictor(sample: Sample) -> np.ndarray:
    """Perfect-knowledge stub: returns the stored ground-truth image."""
    return sample.gt_screen_img


def zero_predictor(sample: Sample) -> np.ndarray:
    """Identity stub: a mid-gray image decoding to the zero screen."""
    return np.full_like(sample.gt_screen_img, 0.5)


@dataclass
class LevelSummary:
    """Aggregate figures for one evaluated level."""

    level: int
    count: int
    mean_mp_distorted: float
    mean_mp_compensated: float
    mean_psnr: float
    mean_mp_bound_screen: float
    mean_mp_bound_receiver: float
    improved_fraction: float


def evaluate_level(
    predictor: Predictor,
    samples: list[Sample],
    manifest: Manifest,
    epoch: int = 0,
    ell_range: tuple[int, int] | None = None,
) -> tuple[list[ReportRow], LevelSummary]:
    """Evaluate a predictor on samples of a single turbulence level.

    For each sample the distorted field at the receiver is regenerated from
    its seed, mode purity is measured before and after compensation with the
    negated predicted screen, and the prediction PSNR is taken against the
    stored ground-truth image. The summary also carries both perfect
    knowledge bounds (screen plane and receiver plane).
    """
    if not samples:
        raise ConfigError("cannot evaluate an empty sample list")
    levels = {s.level_index for s in samples}
    if len(levels) != 1:
        raise ConfigError(f"samples span multiple levels: {sorted(levels)}")
    level = levels.pop()
    config = manifest.config
    ell = config.ell
    if ell_range is None:
        span = max(10, abs(ell) + 5)
        ell_range = (-span, span)

    rows = []
    bounds_screen = []
    bounds_receiver = []
    improved = 0
    for sample in samples:
        screen, at_screen, receiver = synthesize_fields(config, sample.id)
        mp_dist = mode_purity(oam_decompose(receiver, ell_range), ell)

        pred_img = predictor(sample)
        lo, hi = sample.encoding
        pred_screen = PhaseScreen(config.grid, decode_screen(pred_img, lo, hi))
        comp = compensate(receiver, conjugate_screen(pred_screen))
        mp_comp = mode_purity(oam_decompose(comp, ell_range), ell)

        # perfect knowledge at the screen plane restores the beam exactly
        restored = apply_phase(at_screen, conjugate_screen(screen))
        bounds_screen.append(mode_purity(oam_decompose(restored, ell_range), ell))
        rx_bound = compensate(receiver, conjugate_screen(screen))
        bounds_receiver.append(mode_purity(oam_decompose(rx_bound, ell_range), ell))

        improved += mp_comp > mp_dist
        rows.append(
            ReportRow(sample.id, level, mp_dist, mp_comp, psnr(pred_img, sample.gt_screen_img), epoch)
        )

    summary = LevelSummary(
        level=level,
        count=len(rows),
        mean_mp_distorted=float(np.mean([r.mp_distorted for r in rows])),
        mean_mp_compensated=float(np.mean([r.mp_compensated for r in rows])),
        mean_psnr=float(np.mean([r.psnr for r in rows])),
        mean_mp_bound_screen=float(np.mean(bounds_screen)),
        mean_mp_bound_receiver=float(np.mean(bounds_receiver)),
        improved_fraction=improved / len(rows),
    )
    return rows, summary


def epoch_sweep(
    checkpoints: dict[int, str],
    samples: list[Sample],
    manifest: Manifest,
) -> list[tuple[int, float, float]]:
    """Evaluate saved checkpoints, returning (epoch, mean PSNR, mean MP) rows."""
    if not checkpoints:
        raise ConfigError("no checkpoints to sweep")
    table = []
    for epoch in sorted(checkpoints):
        state = load_checkpoint(checkpoints[epoch])
        _, summary = evaluate_level(
            network_predictor(state.network), samples, manifest, epoch=epoch
        )
        table.append((epoch, summary.mean_psnr, summary.mean_mp_compensated))
    return table
