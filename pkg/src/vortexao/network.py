"""Trainable diffractive network: forward model, exact gradients, Adam.

The network is a stack of per-pixel modulation layers separated by equal
free-space hops. A forward pass propagates the encoded input to layer 1,
multiplies by that layer's complex transmission, propagates on, and after
the last layer propagates to the output plane where the intensity is taken
and scaled by its peak to land in [0, 1].

Every building block is linear in the field except the final squared
modulus and the peak scaling, so gradients are computed exactly by adjoint
propagation. With the Wirtinger convention ``A = dL/d(conj u)``:

  output plane   A = G * u_out, where G = dL/dI includes the peak-scaling
                 term (the derivative of the normalization by max(I))
  propagation    A <- adjoint hop (conjugated kernel)
  layer          dL/dphase = 2 Im(A * conj(v)),  dL/dlog_amp = 2 Re(A * conj(v))
                 with v the field just after the layer; then A <- A * conj(t)

The derivative of max(I) contributes only at the argmax pixel; it is
included so finite differences of the full pipeline match the analytic
gradients to first order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import (
    CheckpointError,
    ConfigError,
    DomainError,
    GridMismatchError,
    StaleTapeError,
    TrainingDivergenceError,
)
from .field import ComplexField, GridSpec, PhaseScreen
from .propagation import PropagationKernel, make_kernel, propagate, propagate_adjoint

MODES = ("phase", "amplitude", "hybrid")

# fraction of output pixels allowed to saturate during normalization; the
# scale is the k-th largest intensity so a single stray hot pixel cannot
# rescale the whole image (the analogue of camera full-well saturation)
CLIP_FRACTION = 1e-3

def default_spacing(grid: GridSpec) -> float:
    """Layer separation whose diffraction spread covers the aperture.

    One hop of ``n dx^2 / wavelength`` lets the grid's full angular band
    shear across the whole window, so every output pixel of a hop depends on
    every input pixel; shorter hops give only local coupling and train far
    more slowly. A 0.97 factor keeps the transfer function inside its
    sampling-validity range.
    """
    return 0.97 * grid.n * grid.dx**2 / grid.wavelength


@dataclass
class DiffractiveLayer:
    """One modulation plane: per-pixel phase and log-amplitude.

    ``mode`` selects which arrays are trainable: "phase" freezes amplitude,
    "amplitude" freezes phase, "hybrid" trains both. Amplitude is stored as
    ``exp(log_amplitude)`` with ``log_amplitude <= 0`` so the layer is
    passive (no gain) for any parameter value. Phase is kept unwrapped;
    :meth:`exported_phase` reduces it modulo 2 pi.
    """

    mode: str
    phase: np.ndarray
    log_amplitude: np.ndarray

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown layer mode {self.mode!r}, expected one of {MODES}")
        self.phase = np.asarray(self.phase, dtype=np.float64)
        self.log_amplitude = np.asarray(self.log_amplitude, dtype=np.float64)
        if self.phase.shape != self.log_amplitude.shape:
            raise GridMismatchError("phase and log_amplitude shapes differ")
        if np.any(self.log_amplitude > 0):
            raise ConfigError("log_amplitude must be <= 0 (passive layer)")

    @classmethod
    def identity(cls, n: int, mode: str = "hybrid") -> "DiffractiveLayer":
        return cls(mode, np.zeros((n, n)), np.zeros((n, n)))

    @property
    def trains_phase(self) -> bool:
        return self.mode in ("phase", "hybrid")

    @property
    def trains_amplitude(self) -> bool:
        return self.mode in ("amplitude", "hybrid")

    @property
    def amplitude(self) -> np.ndarray:
        return np.exp(self.log_amplitude)

    def exported_phase(self) -> np.ndarray:
        return np.mod(self.phase, 2.0 * np.pi)

    def transmission(self) -> np.ndarray:
        return np.exp(self.log_amplitude + 1j * self.phase)


class DiffractiveNetwork:
    """Modulation layers plus fixed propagation geometry.

    All hops (input to layer 1, between layers, last layer to output) share
    one separation, so a single kernel is precomputed and reused. Geometry
    is fixed at construction; build a new network to change it.
    """

    def __init__(self, grid: GridSpec, layers: list[DiffractiveLayer], spacing: float):
        if not layers:
            raise ConfigError("network needs at least one layer")
        if spacing <= 0:
            raise ConfigError(f"layer spacing must be positive, got {spacing}")
        for layer in layers:
            if layer.phase.shape != (grid.n, grid.n):
                raise GridMismatchError("layer arrays do not match the network grid")
        self.grid = grid
        self.layers = layers
        self.spacing = float(spacing)
        self.kernel: PropagationKernel = make_kernel(grid, spacing)
        self._version = 0

    @classmethod
    def build(
        cls,
        grid: GridSpec,
        n_layers: int = 5,
        mode: str = "hybrid",
        spacing: float | None = None,
        init: str = "identity",
        init_seed: int = 0,
        init_scale: float = 3.0,
    ) -> "DiffractiveNetwork":
        """Construct a fresh network.

        ``init="identity"`` starts fully transparent. ``init="defocus"``
        places a diverging thin-lens phase of focal length
        ``-init_scale * spacing`` on every layer, which spreads the input
        over the output window from step one and trains markedly faster
        than a transparent start. ``init="random"`` draws layer phases
        uniformly from [-init_scale*pi, init_scale*pi].
        """
        if spacing is None:
            spacing = default_spacing(grid)
        layers = [DiffractiveLayer.identity(grid.n, mode) for _ in range(n_layers)]
        if init == "random":
            g = np.random.Generator(np.random.PCG64(init_seed))
            for layer in layers:
                layer.phase = g.uniform(
                    -init_scale * np.pi, init_scale * np.pi, size=(grid.n, grid.n)
                )
        elif init == "defocus":
            x, y = grid.mesh()
            k = 2.0 * np.pi / grid.wavelength
            lens = k * (x**2 + y**2) / (2.0 * init_scale * spacing)
            for layer in layers:
                layer.phase = lens.copy()
        elif init != "identity":
            raise ConfigError(f"unknown init {init!r}")
        return cls(grid, layers, spacing)

    @property
    def version(self) -> int:
        return self._version

    def bump_version(self) -> None:
        self._version += 1


@dataclass
class ForwardTape:
    """Intermediate planes recorded by a forward pass for the backward pass."""

    version: int
    input_field: ComplexField
    pre_layer: list[ComplexField]
    post_layer: list[ComplexField]
    out_field: ComplexField
    raw_intensity: np.ndarray
    scale: float
    scale_pixel: tuple[int, int]
    clipped: np.ndarray
    output: np.ndarray


@dataclass
class LayerGradients:
    """Per-layer loss gradients; frozen arrays carry zeros."""

    phase: np.ndarray
    log_amplitude: np.ndarray


def encode_input(img: np.ndarray, grid: GridSpec) -> ComplexField:
    """Amplitude-encode a normalized image as a zero-phase field.

    Takes the pixelwise square root so the encoded field's intensity
    reproduces the image (up to the overall power normalization), then
    normalizes to unit total power.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.shape != (grid.n, grid.n):
        raise GridMismatchError(f"image shape {img.shape} does not match grid {grid.n}")
    if img.min() < -1e-12 or img.max() > 1 + 1e-12:
        raise DomainError("encode_input expects values in [0, 1]")
    total = img.sum()
    if total <= 0:
        raise DomainError("cannot encode an all-zero image")
    u = np.sqrt(np.clip(img, 0.0, None)).astype(np.complex128)
    u /= np.sqrt(np.sum(np.abs(u) ** 2) * grid.dx**2)
    return ComplexField(grid, u)


def forward(net: DiffractiveNetwork, input_field: ComplexField) -> tuple[np.ndarray, ForwardTape]:
    """Run the optical forward model.

    Returns the output-plane intensity normalized to [0, 1] together with
    the tape of every intermediate field. Normalization divides by the k-th
    largest intensity (k = CLIP_FRACTION of the pixels, at least 1) and
    clips the brighter pixels to 1, so the brightest pixel is exactly 1 and
    a lone interference spike cannot rescale the whole image.
    """
    if input_field.grid != net.grid:
        raise GridMismatchError("input field grid does not match the network grid")
    pre, post = [], []
    u = input_field
    for layer in net.layers:
        u = propagate(u, net.kernel)
        pre.append(u)
        u = ComplexField(net.grid, u.values * layer.transmission())
        post.append(u)
    out_field = propagate(u, net.kernel)
    raw = np.abs(out_field.values) ** 2
    k = max(1, int(raw.size * CLIP_FRACTION))
    flat = raw.ravel()
    scale = float(np.partition(flat, -k)[-k])
    if scale <= 0:
        raise DomainError("forward pass produced an identically zero output")
    scale_flat = int(np.flatnonzero(flat == scale)[0])
    scale_pixel = (scale_flat // net.grid.n, scale_flat % net.grid.n)
    output = np.minimum(raw / scale, 1.0)
    clipped = raw > scale
    tape = ForwardTape(
        net.version,
        input_field,
        pre,
        post,
        out_field,
        raw,
        scale,
        scale_pixel,
        clipped,
        output,
    )
    return output, tape


def loss_mse(output: np.ndarray, ground_truth: np.ndarray) -> float:
    """Pixel-mean squared error between two equally shaped images."""
    output = np.asarray(output, dtype=np.float64)
    ground_truth = np.asarray(ground_truth, dtype=np.float64)
    if output.shape != ground_truth.shape:
        raise GridMismatchError(
            f"image shapes differ: {output.shape} vs {ground_truth.shape}"
        )
    return float(np.mean((output - ground_truth) ** 2))


def backward(
    net: DiffractiveNetwork,
    tape: ForwardTape,
    output: np.ndarray,
    ground_truth: np.ndarray,
) -> list[LayerGradients]:
    """Exact gradients of the MSE loss for every trainable array.

    The tape must come from a forward pass of the network in its current
    parameter state; a tape recorded before an optimizer step is rejected.
    """
    if tape.version != net.version:
        raise StaleTapeError(
            f"tape recorded at version {tape.version}, network now at {net.version}"
        )
    ground_truth = np.asarray(ground_truth, dtype=np.float64)
    n_pix = output.size
    residual = 2.0 * (output - ground_truth) / n_pix  # dL/d(output)

    # through the robust scaling: output = min(I / s, 1) with s the k-th
    # largest intensity; clipped pixels are flat, the scale pixel carries
    # the derivative of 1/s
    grad_i = np.where(tape.clipped, 0.0, residual) / tape.scale
    grad_i[tape.scale_pixel] -= (
        float(np.sum(np.where(tape.clipped, 0.0, residual * output))) / tape.scale
    )
    # through the squared modulus: A = dL/d(conj u_out)
    adj = ComplexField(net.grid, grad_i * tape.out_field.values)

    grads: list[LayerGradients] = []
    adj = propagate_adjoint(adj, net.kernel)
    for layer, v_post in zip(reversed(net.layers), reversed(tape.post_layer)):
        zeros = np.zeros((net.grid.n, net.grid.n))
        prod = adj.values * np.conj(v_post.values)
        g_phase = 2.0 * np.imag(prod) if layer.trains_phase else zeros
        g_amp = 2.0 * np.real(prod) if layer.trains_amplitude else zeros.copy()
        grads.append(LayerGradients(g_phase, g_amp))
        adj = ComplexField(net.grid, adj.values * np.conj(layer.transmission()))
        adj = propagate_adjoint(adj, net.kernel)
    grads.reverse()
    return grads


@dataclass
class TrainState:
    """Network plus Adam accumulators.

    ``adam_step`` updates the network parameters in place (single writer)
    and returns the same state for chaining.
    """

    network: DiffractiveNetwork
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8
    step: int = 0
    m: list[LayerGradients] = dataclass_field(default_factory=list)
    v: list[LayerGradients] = dataclass_field(default_factory=list)

    def __post_init__(self):
        if not self.m:
            n = self.network.grid.n
            self.m = [
                LayerGradients(np.zeros((n, n)), np.zeros((n, n)))
                for _ in self.network.layers
            ]
            self.v = [
                LayerGradients(np.zeros((n, n)), np.zeros((n, n)))
                for _ in self.network.layers
            ]


def adam_step(state: TrainState, gradients: list[LayerGradients]) -> TrainState:
    """One bias-corrected Adam update over all trainable arrays.

    Frozen arrays (per layer mode) are left untouched. After the update,
    log-amplitudes are clamped to <= 0 so layers stay passive.
    """
    net = state.network
    if len(gradients) != len(net.layers):
        raise GridMismatchError("gradient list length does not match layer count")
    for i, g in enumerate(gradients):
        if not (np.all(np.isfinite(g.phase)) and np.all(np.isfinite(g.log_amplitude))):
            raise TrainingDivergenceError(
                f"non-finite gradient for layer {i} at step {state.step + 1}"
            )
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1**t
    bias2 = 1.0 - b2**t
    for layer, m, v, g in zip(net.layers, state.m, state.v, gradients):
        updates = []
        if layer.trains_phase:
            updates.append(("phase", m, v, g.phase))
        if layer.trains_amplitude:
            updates.append(("log_amplitude", m, v, g.log_amplitude))
        for name, m_slot, v_slot, grad in updates:
            m_arr = getattr(m_slot, name)
            v_arr = getattr(v_slot, name)
            m_arr *= b1
            m_arr += (1.0 - b1) * grad
            v_arr *= b2
            v_arr += (1.0 - b2) * grad**2
            param = getattr(layer, name)
            param -= state.lr * (m_arr / bias1) / (np.sqrt(v_arr / bias2) + state.eps_hat)
        if layer.trains_amplitude:
            np.minimum(layer.log_amplitude, 0.0, out=layer.log_amplitude)
    net.bump_version()
    return state


def train(
    net: DiffractiveNetwork,
    pairs: list[tuple[np.ndarray, np.ndarray]],
    epochs: int,
    batch: int = 32,
    lr: float = 0.01,
    shuffle_seed: int = 0,
    on_epoch=None,
) -> tuple[TrainState, list[float]]:
    """Shuffled mini-batch training with Adam.

    ``pairs`` holds (input image, target image) arrays in [0, 1]. Batch
    gradients are sample means accumulated in a fixed order, so identical
    seeds reproduce identical loss curves. Returns the train state and the
    per-epoch mean sample loss. ``on_epoch(epoch, state, loss)`` runs after
    each epoch, for checkpointing.
    """
    if epochs < 1:
        raise ConfigError(f"epochs must be >= 1, got {epochs}")
    if not pairs:
        raise ConfigError("training dataset is empty")
    if batch < 1:
        raise ConfigError(f"batch size must be >= 1, got {batch}")
    n = net.grid.n
    for x_img, y_img in pairs:
        if x_img.shape != (n, n) or y_img.shape != (n, n):
            raise GridMismatchError("dataset image shapes do not match the network grid")

    inputs = [encode_input(x, net.grid) for x, _ in pairs]
    targets = [np.asarray(y, dtype=np.float64) for _, y in pairs]
    state = TrainState(net, lr=lr)
    rng = np.random.Generator(np.random.PCG64(shuffle_seed))
    losses: list[float] = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(pairs))
        epoch_loss = 0.0
        for start in range(0, len(order), batch):
            idx = order[start : start + batch]
            acc: list[LayerGradients] | None = None
            for j in idx:
                output, tape = forward(net, inputs[j])
                epoch_loss += loss_mse(output, targets[j])
                grads = backward(net, tape, output, targets[j])
                if acc is None:
                    acc = grads
                else:
                    for a, g in zip(acc, grads):
                        a.phase += g.phase
                        a.log_amplitude += g.log_amplitude
            scale = 1.0 / len(idx)
            for a in acc:
                a.phase *= scale
                a.log_amplitude *= scale
            adam_step(state, acc)
        losses.append(epoch_loss / len(pairs))
        if on_epoch is not None:
            on_epoch(epoch, state, losses[-1])
    return state, losses


def predict_screen(
    net: DiffractiveNetwork, distorted_img: np.ndarray, encoding: tuple[float, float]
) -> PhaseScreen:
    """Map a distorted intensity image to a predicted phase screen.

    The forward output in [0, 1] is decoded through the dataset's fixed
    screen encoding range: ``phase = lo + output * (hi - lo)``.
    """
    if encoding is None:
        raise ConfigError("screen encoding range missing; dataset manifest required")
    lo, hi = float(encoding[0]), float(encoding[1])
    output, _ = forward(net, encode_input(distorted_img, net.grid))
    return PhaseScreen(net.grid, lo + output * (hi - lo))


_MAGIC = b"VAOCKPT1"
_MODE_CODES = {"phase": 0, "amplitude": 1, "hybrid": 2}
_MODE_NAMES = {code: name for name, code in _MODE_CODES.items()}
_CKPT_VERSION = 1


def save_checkpoint(path, state: TrainState) -> None:
    """Serialize network geometry, parameters and optimizer state.

    Little-endian binary: magic, version, grid n, dx, wavelength, spacing,
    layer count, mode, then per layer the phase and log-amplitude arrays as
    float64, then the Adam moments and the step count. Round-trips bit
    exactly.
    """
    from .images import atomic_write_bytes

    net = state.network
    g = net.grid
    parts = [
        _MAGIC,
        struct.pack(
            "<IIdddIB",
            _CKPT_VERSION,
            g.n,
            g.dx,
            g.wavelength,
            net.spacing,
            len(net.layers),
            _MODE_CODES[net.layers[0].mode],
        ),
    ]
    for layer in net.layers:
        parts.append(layer.phase.astype("<f8").tobytes())
        parts.append(layer.log_amplitude.astype("<f8").tobytes())
    for m, v in zip(state.m, state.v):
        parts.append(m.phase.astype("<f8").tobytes())
        parts.append(m.log_amplitude.astype("<f8").tobytes())
        parts.append(v.phase.astype("<f8").tobytes())
        parts.append(v.log_amplitude.astype("<f8").tobytes())
    parts.append(
        struct.pack("<Qdddd", state.step, state.lr, state.beta1, state.beta2, state.eps_hat)
    )
    atomic_write_bytes(path, b"".join(parts))


def load_checkpoint(path) -> TrainState:
    """Restore a :class:`TrainState` written by :func:`save_checkpoint`."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != _MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a checkpoint")
    header = struct.Struct("<IIdddIB")
    try:
        version, n, dx, wavelength, spacing, n_layers, mode_code = header.unpack_from(data, 8)
    except struct.error as exc:
        raise CheckpointError(f"{path}: truncated header") from exc
    if version != _CKPT_VERSION:
        raise CheckpointError(f"{path}: schema version {version}, expected {_CKPT_VERSION}")
    if mode_code not in _MODE_NAMES:
        raise CheckpointError(f"{path}: unknown layer mode code {mode_code}")
    mode = _MODE_NAMES[mode_code]
    pos = 8 + header.size
    arr_bytes = n * n * 8
    expected = pos + n_layers * 2 * arr_bytes + n_layers * 4 * arr_bytes + 8 + 32
    if len(data) != expected:
        raise CheckpointError(f"{path}: size {len(data)} != expected {expected}")

    def read_array():
        nonlocal pos
        arr = np.frombuffer(data[pos : pos + arr_bytes], dtype="<f8").reshape(n, n).copy()
        pos += arr_bytes
        return arr

    layers = []
    for _ in range(n_layers):
        phase = read_array()
        log_amp = read_array()
        layers.append(DiffractiveLayer(mode, phase, log_amp))
    grid = GridSpec(n, dx, wavelength)
    net = DiffractiveNetwork(grid, layers, spacing)
    m, v = [], []
    for _ in range(n_layers):
        m.append(LayerGradients(read_array(), read_array()))
        v.append(LayerGradients(read_array(), read_array()))
    step, lr, beta1, beta2, eps_hat = struct.unpack_from("<Qdddd", data, pos)
    return TrainState(
        net, lr=lr, beta1=beta1, beta2=beta2, eps_hat=eps_hat, step=step, m=m, v=v
    )
