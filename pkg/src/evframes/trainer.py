"""Joint negative log-likelihood over frame sequences and the training loop.

Each gold frame contributes six log-probability terms: the four span
endpoints under the pointer distributions and the two labels under the
classifier distributions.  The batch loss is the mean of those per-frame
losses over the batch x frame-slot grid; the null frames padding every
gold sequence are included by default so the decoder learns its stop
signal.  Model selection keeps the epoch snapshot with the best dev-set
ARC F1.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import torch

from .corpus import Batch, FeatureVocab, build_vocab, make_batches
from .decoder import StepOutput
from .encoder import EncoderConfig, build_token_vocab
from .errors import CheckpointError, ConfigError
from .evaluator import EvalReport, score
from .frame_codec import EventTuple, LabelSchema
from .inferencer import extract_events
from .model import ExtractionModel, build_model

PROB_FLOOR = 1e-12
CHECKPOINT_VERSION = "evframes-checkpoint-1"

_DTYPES = {"float32": torch.float32, "float64": torch.float64}


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters.

    ``dropout`` here is the run-level default; the token encoder applies
    whatever its own config says, and the CLI feeds this value in when
    the encoder section does not override it.  ``grad_clip=0`` disables
    clipping.
    """

    epochs: int = 40
    batch_size: int = 32
    learning_rate: float = 0.001
    weight_decay: float = 1e-5
    dropout: float = 0.5
    max_tuples: int = 8
    seed: int = 13
    pad_tuples_in_loss: bool = True
    grad_clip: float = 5.0
    device: str = "cpu"

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.max_tuples < 1:
            raise ConfigError("epochs, batch_size and max_tuples must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if self.weight_decay < 0 or self.grad_clip < 0:
            raise ConfigError("weight_decay and grad_clip must be non-negative")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in self.__dataclass_fields__.values()}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


def _floored_log(prob: torch.Tensor, index: torch.Tensor) -> torch.Tensor:
    """log prob[index] along dim 1, floored at PROB_FLOOR; (B,) result."""
    picked = prob.gather(1, index.unsqueeze(1)).squeeze(1)
    return torch.log(picked.clamp(min=PROB_FLOOR))


def sequence_nll(outputs: list[StepOutput], gold_positions: torch.Tensor,
                 gold_etype: torch.Tensor, gold_role: torch.Tensor) -> torch.Tensor:
    """(B, T) per-frame negative log-likelihood matrix."""
    per_step = []
    for t, out in enumerate(outputs):
        total = (
            _floored_log(out.s_tr_prob, gold_positions[:, t, 0])
            + _floored_log(out.e_tr_prob, gold_positions[:, t, 1])
            + _floored_log(out.s_ar_prob, gold_positions[:, t, 2])
            + _floored_log(out.e_ar_prob, gold_positions[:, t, 3])
            + _floored_log(out.etype_prob, gold_etype[:, t])
            + _floored_log(out.role_prob, gold_role[:, t])
        )
        per_step.append(-total)
    return torch.stack(per_step, dim=1)


def tuple_loss(step_output: StepOutput, gold: EventTuple, schema: LabelSchema,
               row: int = 0) -> torch.Tensor:
    """Negative log-likelihood of one gold frame under one decode step."""
    pick = lambda prob, i: torch.log(
        prob[row, i].clamp(min=PROB_FLOOR) if prob.dim() == 2 else prob[i].clamp(min=PROB_FLOOR)
    )
    total = (
        pick(step_output.s_tr_prob, gold.s_tr)
        + pick(step_output.e_tr_prob, gold.e_tr)
        + pick(step_output.s_ar_prob, gold.s_ar)
        + pick(step_output.e_ar_prob, gold.e_ar)
        + pick(step_output.etype_prob, schema.event_index(gold.event_type))
        + pick(step_output.role_prob, schema.role_index(gold.role))
    )
    return -total


def batch_loss(outputs: list[StepOutput], batch: Batch,
               pad_tuples_in_loss: bool = True) -> torch.Tensor:
    """Mean per-frame NLL over the batch; optionally over real frames only."""
    device = outputs[0].s_tr_prob.device
    as_t = lambda a: torch.from_numpy(a).to(device)
    nll = sequence_nll(outputs, as_t(batch.gold_positions), as_t(batch.gold_etype),
                       as_t(batch.gold_role))
    if pad_tuples_in_loss:
        return nll.mean()
    mask = as_t(batch.tuple_mask).to(nll.dtype)
    return (nll * mask).sum() / mask.sum().clamp(min=1)


@dataclass
class TrainResult:
    model: ExtractionModel
    log: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_dev_arc: float = 0.0
    vocab: FeatureVocab | None = None


def evaluate(model: ExtractionModel, examples, max_steps: int) -> EvalReport:
    """Greedy-decode a corpus and score it against its own gold frames."""
    predictions = {ex.id: extract_events(ex.sentence, model, max_steps) for ex in examples}
    return score(predictions, examples)


def train(train_examples, dev_examples, schema: LabelSchema, config: TrainConfig,
          encoder_config: EncoderConfig, d_p: int = 968,
          dtype: torch.dtype = torch.float32, log_fn=None) -> TrainResult:
    """Run the full optimization loop with per-epoch dev model selection.

    Returns the parameter snapshot with the highest dev ARC F1; the log
    has one entry per epoch with the mean train loss and all four dev F1
    scores.
    """
    train_examples = list(train_examples)
    dev_examples = list(dev_examples)
    if not train_examples or not dev_examples:
        raise ConfigError("train and dev corpora must be non-empty")

    torch.manual_seed(config.seed)
    vocab = build_vocab(train_examples)
    token_vocab = build_token_vocab([train_examples])
    model = build_model(schema, vocab, token_vocab, encoder_config, d_p=d_p,
                        device=config.device, dtype=dtype)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate,
                                 weight_decay=config.weight_decay)

    result = TrainResult(model=model, vocab=vocab)
    best_state = None
    for epoch in range(config.epochs):
        model.train()
        batches = make_batches(train_examples, vocab, schema, config.batch_size,
                               config.max_tuples, shuffle_seed=config.seed + epoch,
                               max_word_len=encoder_config.max_word_len)
        epoch_loss, steps = 0.0, 0
        for i, batch in enumerate(batches):
            optimizer.zero_grad()
            outputs = model(batch, config.max_tuples)
            loss = batch_loss(outputs, batch, config.pad_tuples_in_loss)
            if not torch.isfinite(loss):
                raise RuntimeError(f"non-finite loss in epoch {epoch + 1}, batch {i + 1}")
            loss.backward()
            if config.grad_clip:
                torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
            optimizer.step()
            epoch_loss += float(loss)
            steps += 1

        report = evaluate(model, dev_examples, max_steps=config.max_tuples)
        entry = {
            "epoch": epoch + 1,
            "steps": steps,
            "train_loss": epoch_loss / max(steps, 1),
            "dev_ti_f1": report.ti.f1,
            "dev_tc_f1": report.tc.f1,
            "dev_ai_f1": report.ai.f1,
            "dev_arc_f1": report.arc.f1,
        }
        result.log.append(entry)
        if log_fn is not None:
            log_fn(entry)
        if best_state is None or report.arc.f1 > result.best_dev_arc:
            result.best_dev_arc = report.arc.f1
            result.best_epoch = epoch + 1
            best_state = copy.deepcopy(model.state_dict())

    model.load_state_dict(best_state)
    model.eval()
    return result


# --------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, model: ExtractionModel, train_config: TrainConfig | None = None,
                    config_echo: dict | None = None, log: list[dict] | None = None) -> None:
    """Serialize parameters together with everything needed to rebuild."""
    payload = {
        "version": CHECKPOINT_VERSION,
        "model_state": model.state_dict(),
        "schema": model.schema.to_dict(),
        "vocab": model.vocab.to_dict(),
        "token_vocab": model.encoder.token_vocab,
        "encoder_config": model.encoder.config.to_dict(),
        "d_p": model.decoder.d_p,
        "dtype": str(next(model.parameters()).dtype).removeprefix("torch."),
        "train_config": train_config.to_dict() if train_config else None,
        "config_echo": config_echo,
        "log": log,
    }
    torch.save(payload, path)


def load_checkpoint(path, device: str = "cpu") -> tuple[ExtractionModel, dict]:
    """Rebuild a model from a checkpoint file; raises CheckpointError on
    corruption or version mismatch."""
    try:
        payload = torch.load(path, map_location=device, weights_only=False)
    except Exception as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or "version" not in payload:
        raise CheckpointError(f"{path} is not an evframes checkpoint")
    if payload["version"] != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint version {payload['version']!r} is incompatible with "
            f"{CHECKPOINT_VERSION!r}"
        )
    dtype = _DTYPES.get(payload["dtype"])
    if dtype is None:
        raise CheckpointError(f"unsupported checkpoint dtype {payload['dtype']!r}")
    model = build_model(
        LabelSchema.from_dict(payload["schema"]),
        FeatureVocab.from_dict(payload["vocab"]),
        payload["token_vocab"],
        EncoderConfig.from_dict(payload["encoder_config"]),
        d_p=payload["d_p"],
        device=device,
        dtype=dtype,
    )
    model.load_state_dict(payload["model_state"])
    model.eval()
    return model, payload
