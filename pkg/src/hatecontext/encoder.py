"""Three-branch recurrent classifier over a comment and its context.

The comment branch runs word embeddings through a bi-directional LSTM with
additive attention pooling; the title branch is a bi-LSTM summary over word
embeddings; the username branch is a bi-LSTM summary over one-hot characters.
Enabled branch outputs are concatenated and fed to a scalar sigmoid head.

Word embeddings are pretrained, loaded from a text file, and frozen. All
math runs on the numcore tape so training uses exact reverse-mode gradients.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import numcore as nc
from .numcore import ParameterSet, Tape, Tensor

COMMENT_ENCODERS = ("lstm", "bilstm", "bilstm_attention")
BRANCHES = ("comment", "title", "username")

_PROB_FLOOR = 1e-12


class EmbeddingError(ValueError):
    """Raised when an embedding file is malformed."""


class TrainingError(RuntimeError):
    """Raised when training produces a non-finite loss."""


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    word_map: dict

    def lookup(self, word: str) -> np.ndarray:
        vec = self.word_map.get(word)
        if vec is None:
            return np.zeros(self.dim)
        return vec


def load_embeddings(path: str, dim: int) -> EmbeddingTable:
    """Load space-separated text vectors, with an optional ``count dim``
    header line. Unknown words later look up as the zero vector."""
    word_map: dict = {}
    with open(path, encoding="utf-8") as handle:
        first = handle.readline()
        lineno = 1
        parts = first.split()
        is_header = len(parts) == 2 and all(p.lstrip("-").isdigit() for p in parts)
        if is_header:
            if int(parts[1]) != dim:
                raise EmbeddingError(
                    f"{path}:1: header dimension {parts[1]} does not match requested {dim}"
                )
        elif parts:
            _add_embedding_line(word_map, parts, dim, path, lineno)
        for line in handle:
            lineno += 1
            parts = line.split()
            if not parts:
                continue
            _add_embedding_line(word_map, parts, dim, path, lineno)
    return EmbeddingTable(dim=dim, word_map=word_map)


def _add_embedding_line(word_map, parts, dim, path, lineno) -> None:
    if len(parts) != dim + 1:
        raise EmbeddingError(
            f"{path}:{lineno}: expected {dim} values for {parts[0]!r}, "
            f"got {len(parts) - 1}"
        )
    try:
        vec = np.asarray([float(v) for v in parts[1:]], dtype=np.float64)
    except ValueError as exc:
        raise EmbeddingError(f"{path}:{lineno}: non-numeric value") from exc
    if not np.all(np.isfinite(vec)):
        raise EmbeddingError(f"{path}:{lineno}: non-finite value")
    word_map[parts[0]] = vec


def save_embeddings(table: EmbeddingTable, path: str) -> None:
    """Write vectors in the text format; values round-trip exactly."""
    with open(path, "w", encoding="utf-8") as handle:
        for word in table.word_map:
            values = " ".join(f"{v:.17g}" for v in table.word_map[word])
            handle.write(f"{word} {values}\n")


@dataclass(frozen=True)
class CharVocab:
    """Ordered character set; one-hot width is len(chars) + 1, the extra
    final slot encoding unknown characters."""

    chars: tuple
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "index", {c: i for i, c in enumerate(self.chars)})

    @classmethod
    def build(cls, strings: Sequence[str]) -> "CharVocab":
        chars = sorted({ch for s in strings for ch in s.lower()})
        return cls(chars=tuple(chars))

    @property
    def width(self) -> int:
        return len(self.chars) + 1

    def encode(self, text: str) -> np.ndarray:
        """One-hot rows for each character; empty text encodes as a single
        unknown character."""
        lowered = text.lower()
        if not lowered:
            lowered = "\0"  # guaranteed out of vocabulary
        out = np.zeros((len(lowered), self.width))
        for row, ch in enumerate(lowered):
            out[row, self.index.get(ch, self.width - 1)] = 1.0
        return out


@dataclass(frozen=True)
class LSTMParams:
    """One direction's weights: W (4h, d), U (4h, h), b (4h,).

    Gate blocks are laid out [input, forget, output, candidate].
    """

    W: Tensor
    U: Tensor
    b: Tensor
    hidden: int


@dataclass(frozen=True)
class AttentionParams:
    W: Tensor  # (a, 2h)
    v: Tensor  # (a,)


@dataclass(frozen=True)
class EncoderConfig:
    hidden: int = 100
    attention_width: int | None = None  # None means same as hidden
    comment_encoder: str = "bilstm_attention"
    branches: tuple = ("comment",)
    recurrent_dropout: float = 0.2
    batch_size: int = 128
    epochs: int = 30
    learning_rate: float = 1e-3
    init_scale: float = 0.08

    def __post_init__(self) -> None:
        if self.hidden < 1:
            raise ValueError(f"hidden size must be positive, got {self.hidden}")
        if self.attention_width is not None and self.attention_width < 1:
            raise ValueError(
                f"attention width must be positive, got {self.attention_width}"
            )
        if self.comment_encoder not in COMMENT_ENCODERS:
            raise ValueError(f"unknown comment encoder {self.comment_encoder!r}")
        unknown = set(self.branches) - set(BRANCHES)
        if unknown:
            raise ValueError(f"unknown branches: {sorted(unknown)}")
        if not self.branches:
            raise ValueError("at least one branch must be enabled")
        ordered = tuple(b for b in BRANCHES if b in self.branches)
        object.__setattr__(self, "branches", ordered)
        if not 0.0 <= self.recurrent_dropout < 1.0:
            raise ValueError(
                f"recurrent dropout must be in [0, 1), got {self.recurrent_dropout}"
            )
        if self.batch_size < 1 or self.epochs < 0 or self.learning_rate <= 0:
            raise ValueError("batch_size, epochs, and learning_rate must be sensible")

    @property
    def attn_width(self) -> int:
        return self.hidden if self.attention_width is None else self.attention_width

    def branch_width(self, branch: str) -> int:
        if branch == "comment" and self.comment_encoder == "lstm":
            return self.hidden
        return 2 * self.hidden

    @property
    def output_width(self) -> int:
        return sum(self.branch_width(b) for b in self.branches)


@dataclass(frozen=True)
class EncoderInstance:
    comment_tokens: tuple
    title_tokens: tuple
    username: str
    label: int


def lstm_step(
    params: LSTMParams, x_t: Tensor, h_prev: Tensor, c_prev: Tensor
) -> tuple:
    """One LSTM step: gate activations from the current input and previous
    state, then the standard cell/hidden update."""
    h = params.hidden
    gates = nc.add(
        nc.add(nc.matmul(params.W, x_t), nc.matmul(params.U, h_prev)), params.b
    )
    i_gate = nc.sigmoid(nc.narrow(gates, 0, h))
    f_gate = nc.sigmoid(nc.narrow(gates, h, 2 * h))
    o_gate = nc.sigmoid(nc.narrow(gates, 2 * h, 3 * h))
    candidate = nc.tanh(nc.narrow(gates, 3 * h, 4 * h))
    c_t = nc.add(nc.pointwise_mul(f_gate, c_prev), nc.pointwise_mul(i_gate, candidate))
    h_t = nc.pointwise_mul(o_gate, nc.tanh(c_t))
    return h_t, c_t


def _run_direction(
    params: LSTMParams,
    inputs: Sequence[Tensor],
    dropout_mask: Tensor | None = None,
) -> list:
    """Hidden states for one direction. The recurrent dropout mask, when
    given, multiplies h_prev entering every gate computation; one mask is
    used for the whole sequence."""
    tape = params.W.tape
    h = tape.constant(np.zeros(params.hidden))
    c = tape.constant(np.zeros(params.hidden))
    states = []
    for x_t in inputs:
        h_in = h if dropout_mask is None else nc.pointwise_mul(h, dropout_mask)
        h, c = lstm_step(params, x_t, h_in, c)
        states.append(h)
    return states


def lstm_encode(
    params: LSTMParams,
    inputs: Sequence[Tensor],
    dropout_mask: Tensor | None = None,
) -> tuple:
    """Unidirectional encoding: (per-step states (T, h), final state (h,))."""
    if not inputs:
        raise ValueError("cannot encode an empty sequence")
    states = _run_direction(params, inputs, dropout_mask)
    rows = [nc.reshape(s, (1, params.hidden)) for s in states]
    return nc.concat(rows, axis=0), states[-1]


def bilstm_encode(
    params_fwd: LSTMParams,
    params_bwd: LSTMParams,
    inputs: Sequence[Tensor],
    dropout_masks: tuple | None = None,
) -> tuple:
    """Bidirectional encoding.

    Returns (per-step states (T, 2h), summary (2h,)): position t pairs the
    forward state after reading t tokens with the backward state after
    reading the suffix from the right; the summary concatenates each
    direction's final state.
    """
    if not inputs:
        raise ValueError("cannot encode an empty sequence")
    mask_fwd, mask_bwd = dropout_masks if dropout_masks else (None, None)
    fwd = _run_direction(params_fwd, inputs, mask_fwd)
    bwd_rev = _run_direction(params_bwd, list(reversed(inputs)), mask_bwd)
    bwd = list(reversed(bwd_rev))
    width = params_fwd.hidden + params_bwd.hidden
    rows = [
        nc.reshape(nc.concat([f, b]), (1, width)) for f, b in zip(fwd, bwd)
    ]
    states = nc.concat(rows, axis=0)
    summary = nc.concat([fwd[-1], bwd_rev[-1]])
    return states, summary


def attention_pool(states: Tensor, params: AttentionParams) -> tuple:
    """Additive attention: scores via a tanh projection, softmax weights,
    and the weighted sum of states. Returns (context, weights)."""
    projected = nc.tanh(nc.matmul(states, nc.transpose(params.W)))
    scores = nc.matmul(projected, params.v)
    weights = nc.softmax(scores)
    context = nc.matmul(weights, states)
    return context, weights


def bce_loss(p: float, y: int) -> float:
    """Binary cross entropy on a probability, clamped away from 0 and 1."""
    if y not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {y!r}")
    clamped = min(max(p, _PROB_FLOOR), 1.0 - _PROB_FLOOR)
    return -(y * math.log(clamped) + (1 - y) * math.log(1.0 - clamped))


def _bce_node(tape: Tape, p: Tensor, y: int) -> Tensor:
    clamped = nc.clip(p, _PROB_FLOOR, 1.0 - _PROB_FLOOR)
    if y == 1:
        return nc.scale(nc.log(clamped), -1.0)
    one = tape.constant(np.ones(()))
    return nc.scale(nc.log(nc.add(one, nc.scale(clamped, -1.0))), -1.0)


class ContextNetModel:
    """Parameter container plus forward pass for the three-branch model."""

    def __init__(
        self,
        config: EncoderConfig,
        embeddings: EmbeddingTable,
        char_vocab: CharVocab,
        params: ParameterSet,
    ):
        self.config = config
        self.embeddings = embeddings
        self.char_vocab = char_vocab
        self.params = params

    @classmethod
    def build(
        cls,
        config: EncoderConfig,
        embeddings: EmbeddingTable,
        char_vocab: CharVocab,
        seed: int = 0,
    ) -> "ContextNetModel":
        """Seeded initialization: weights uniform in +-init_scale, biases
        zero except the forget-gate block at 1.0."""
        rng = np.random.default_rng(seed)
        params = ParameterSet()
        h = config.hidden

        def uniform(shape):
            return rng.uniform(-config.init_scale, config.init_scale, size=shape)

        def add_lstm(prefix: str, input_dim: int) -> None:
            params.add(f"{prefix}.W", uniform((4 * h, input_dim)))
            params.add(f"{prefix}.U", uniform((4 * h, h)))
            bias = np.zeros(4 * h)
            bias[h : 2 * h] = 1.0
            params.add(f"{prefix}.b", bias)

        if "comment" in config.branches:
            add_lstm("comment.fwd", embeddings.dim)
            if config.comment_encoder != "lstm":
                add_lstm("comment.bwd", embeddings.dim)
            if config.comment_encoder == "bilstm_attention":
                params.add("comment.attn.W", uniform((config.attn_width, 2 * h)))
                params.add("comment.attn.v", uniform((config.attn_width,)))
        if "title" in config.branches:
            add_lstm("title.fwd", embeddings.dim)
            add_lstm("title.bwd", embeddings.dim)
        if "username" in config.branches:
            add_lstm("username.fwd", char_vocab.width)
            add_lstm("username.bwd", char_vocab.width)
        params.add("out.w", uniform((config.output_width,)))
        params.add("out.b", np.zeros(()))
        return cls(config, embeddings, char_vocab, params)

    def _bind(self, tape: Tape) -> dict:
        return {name: tape.parameter(name, self.params) for name in self.params.values}

    def _lstm_view(self, bound: dict, prefix: str) -> LSTMParams:
        return LSTMParams(
            W=bound[f"{prefix}.W"],
            U=bound[f"{prefix}.U"],
            b=bound[f"{prefix}.b"],
            hidden=self.config.hidden,
        )

    def _branch_inputs(self, tape: Tape, branch: str, instance: EncoderInstance) -> list:
        if branch == "username":
            rows = self.char_vocab.encode(instance.username)
            return [tape.constant(rows[t]) for t in range(rows.shape[0])]
        tokens = (
            instance.comment_tokens if branch == "comment" else instance.title_tokens
        )
        if not tokens:
            # synthetic padding token with a zero embedding
            return [tape.constant(np.zeros(self.embeddings.dim))]
        return [tape.constant(self.embeddings.lookup(t)) for t in tokens]

    def _dropout_masks(self, tape: Tape, train: bool, rng, bidirectional: bool):
        rate = self.config.recurrent_dropout
        if not train or rate == 0.0:
            return None

        def one_mask() -> Tensor:
            keep = (rng.random(self.config.hidden) >= rate).astype(np.float64)
            return tape.constant(keep / (1.0 - rate))

        if bidirectional:
            return one_mask(), one_mask()
        return (one_mask(),)

    def _branch_output(
        self,
        tape: Tape,
        bound: dict,
        branch: str,
        instance: EncoderInstance,
        train: bool,
        rng,
    ) -> Tensor:
        inputs = self._branch_inputs(tape, branch, instance)
        if branch == "comment" and self.config.comment_encoder == "lstm":
            masks = self._dropout_masks(tape, train, rng, bidirectional=False)
            _, final = lstm_encode(
                self._lstm_view(bound, "comment.fwd"),
                inputs,
                masks[0] if masks else None,
            )
            return final
        masks = self._dropout_masks(tape, train, rng, bidirectional=True)
        states, summary = bilstm_encode(
            self._lstm_view(bound, f"{branch}.fwd"),
            self._lstm_view(bound, f"{branch}.bwd"),
            inputs,
            masks,
        )
        if branch == "comment" and self.config.comment_encoder == "bilstm_attention":
            attn = AttentionParams(W=bound["comment.attn.W"], v=bound["comment.attn.v"])
            context, _ = attention_pool(states, attn)
            return context
        return summary

    def _probability_node(
        self,
        tape: Tape,
        bound: dict,
        instance: EncoderInstance,
        train: bool,
        rng,
    ) -> Tensor:
        outputs = [
            self._branch_output(tape, bound, branch, instance, train, rng)
            for branch in self.config.branches
        ]
        combined = outputs[0] if len(outputs) == 1 else nc.concat(outputs)
        logit = nc.add(nc.matmul(bound["out.w"], combined), bound["out.b"])
        return nc.sigmoid(logit)

    def forward(
        self,
        comment_tokens: Sequence[str] | None = None,
        title_tokens: Sequence[str] | None = None,
        username: str | None = None,
        mode: str = "eval",
        rng=None,
    ) -> float:
        """Probability that the input is hateful. Eval mode is a pure
        function of the inputs; train mode applies recurrent dropout and
        requires an rng."""
        if mode not in ("train", "eval"):
            raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
        train = mode == "train"
        if train and rng is None:
            raise ValueError("train mode requires an rng")
        provided = {"comment": comment_tokens, "title": title_tokens, "username": username}
        for branch in self.config.branches:
            if provided[branch] is None:
                raise ValueError(f"branch {branch!r} is enabled but its input is missing")
        instance = EncoderInstance(
            comment_tokens=tuple(comment_tokens or ()),
            title_tokens=tuple(title_tokens or ()),
            username=username or "",
            label=0,
        )
        tape = Tape()
        bound = self._bind(tape)
        prob = self._probability_node(tape, bound, instance, train, rng)
        return float(prob.data)

    def instance_loss(
        self, tape: Tape, bound: dict, instance: EncoderInstance, train: bool, rng
    ) -> Tensor:
        prob = self._probability_node(tape, bound, instance, train, rng)
        return _bce_node(tape, prob, instance.label)


class Adam:
    """Adam with bias correction; state is kept per parameter name."""

    def __init__(
        self,
        params: ParameterSet,
        learning_rate: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = params
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(v) for name, v in params.values.items()}
        self.v = {name: np.zeros_like(v) for name, v in params.values.items()}

    def step(self) -> None:
        self.t += 1
        correction1 = 1.0 - self.beta1**self.t
        correction2 = 1.0 - self.beta2**self.t
        for name, value in self.params.values.items():
            grad = self.params.grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            m_hat = m / correction1
            v_hat = v / correction2
            value -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def train(
    model: ContextNetModel,
    instances: Sequence[EncoderInstance],
    config: EncoderConfig | None = None,
    seed: int = 0,
) -> tuple:
    """Mini-batch training with Adam; returns (model, per-epoch mean loss).

    Shuffling, dropout masks, and hence the final parameters are a
    deterministic function of the seed. Dropout masks are drawn once per
    sequence per epoch. An explicit ``config`` may override only the
    optimization-loop fields (epochs, batch_size, learning_rate);
    architecture and dropout are fixed by the model it was built with.
    """
    if not instances:
        raise ValueError("training set is empty")
    cfg = config if config is not None else model.config
    if config is not None:
        frozen = ("hidden", "attention_width", "comment_encoder", "branches",
                  "recurrent_dropout", "init_scale")
        for name in frozen:
            if getattr(config, name) != getattr(model.config, name):
                raise ValueError(
                    f"config override may not change {name!r}; rebuild the model"
                )
    rng = np.random.default_rng(seed)
    optimizer = Adam(model.params, learning_rate=cfg.learning_rate)
    n = len(instances)
    trace: list = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            tape = Tape()
            bound = model._bind(tape)
            losses = [
                nc.reshape(
                    model.instance_loss(tape, bound, instances[idx], True, rng),
                    (1,),
                )
                for idx in batch
            ]
            batch_loss = nc.mean(nc.concat(losses))
            value = float(batch_loss.data)
            if not np.isfinite(value):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch starting at {start}"
                )
            model.params.zero_grads()
            nc.backward(batch_loss)
            optimizer.step()
            epoch_loss += value * len(batch)
        trace.append(epoch_loss / n)
    return model, trace


def _config_to_dict(config: EncoderConfig) -> dict:
    return {
        "hidden": config.hidden,
        "attention_width": config.attention_width,
        "comment_encoder": config.comment_encoder,
        "branches": list(config.branches),
        "recurrent_dropout": config.recurrent_dropout,
        "batch_size": config.batch_size,
        "epochs": config.epochs,
        "learning_rate": config.learning_rate,
        "init_scale": config.init_scale,
    }


def _config_from_dict(payload: dict) -> EncoderConfig:
    return EncoderConfig(
        hidden=payload["hidden"],
        attention_width=payload["attention_width"],
        comment_encoder=payload["comment_encoder"],
        branches=tuple(payload["branches"]),
        recurrent_dropout=payload["recurrent_dropout"],
        batch_size=payload["batch_size"],
        epochs=payload["epochs"],
        learning_rate=payload["learning_rate"],
        init_scale=payload["init_scale"],
    )


def save_model(model: ContextNetModel, path: str) -> None:
    """JSON serialization with 17-significant-digit parameter values;
    embeddings are external and only their dimension is recorded."""
    payload = {
        "config": _config_to_dict(model.config),
        "char_vocab": list(model.char_vocab.chars),
        "embedding_dim": model.embeddings.dim,
        "params": {
            name: {
                "shape": list(value.shape),
                "values": [f"{v:.17g}" for v in value.reshape(-1)],
            }
            for name, value in model.params.values.items()
        },
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True)
        handle.write("\n")


def load_model(path: str, embeddings: EmbeddingTable) -> ContextNetModel:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload["embedding_dim"] != embeddings.dim:
        raise EmbeddingError(
            f"{path}: model expects {payload['embedding_dim']}-dim embeddings, "
            f"got {embeddings.dim}"
        )
    config = _config_from_dict(payload["config"])
    char_vocab = CharVocab(chars=tuple(payload["char_vocab"]))
    params = ParameterSet()
    for name, record in payload["params"].items():
        values = np.asarray([float(v) for v in record["values"]], dtype=np.float64)
        params.add(name, values.reshape(record["shape"]))
    return ContextNetModel(config, embeddings, char_vocab, params)


def variant_configs(hidden: int = 100, **overrides) -> dict:
    """The standard model family: comment-only encoder variants plus the
    attention model with added context branches."""
    def cfg(comment_encoder: str, branches: tuple) -> EncoderConfig:
        return replace(
            EncoderConfig(hidden=hidden, comment_encoder=comment_encoder, branches=branches),
            **overrides,
        )

    return {
        "lstm": cfg("lstm", ("comment",)),
        "bilstm": cfg("bilstm", ("comment",)),
        "bilstm_attention": cfg("bilstm_attention", ("comment",)),
        "bilstm_attention+username": cfg("bilstm_attention", ("comment", "username")),
        "bilstm_attention+title": cfg("bilstm_attention", ("comment", "title")),
        "bilstm_attention+title+username": cfg(
            "bilstm_attention", ("comment", "title", "username")
        ),
    }
