"""One frame per decoding step.

Each step t: an additive-attention summary e_t of the sentence (queried
by the previous recurrent state and the running sum of earlier frame
embeddings) feeds an LSTM cell; its hidden state drives a trigger
pointer network, an argument pointer network stacked on the trigger
one, and two classifiers for event type and role.  The pointer networks
are BiLSTMs over the token encodings with per-token start/end scoring
heads.  The step's soft span distributions give probability-weighted
phrase vectors whose concatenation is the frame embedding accumulated
for later steps, so decoding is end-to-end differentiable with no
discrete feedback.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import torch
from torch import nn

from .encoder import TokenEncodings


@dataclass
class DecoderState:
    """Recurrent decoder state: LSTM (h, c), frame-embedding sum, step index."""

    h: torch.Tensor  # (B, d_h)
    c: torch.Tensor  # (B, d_h)
    etup_prev: torch.Tensor  # (B, 8*d_p), zero at step 0
    step: int = 0


@dataclass
class StepOutput:
    """All six per-frame distributions plus the soft phrase vectors."""

    s_tr_prob: torch.Tensor  # (B, N)
    e_tr_prob: torch.Tensor
    s_ar_prob: torch.Tensor
    e_ar_prob: torch.Tensor
    etype_prob: torch.Tensor  # (B, p + 1)
    role_prob: torch.Tensor  # (B, r + 1)
    ev: torch.Tensor  # trigger phrase vector, (B, 4*d_p)
    arg: torch.Tensor  # argument phrase vector, (B, 4*d_p)


def masked_softmax(logits: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Softmax over the last dimension restricted to mask==True positions."""
    return torch.softmax(logits.masked_fill(~mask, float("-inf")), dim=-1)


def _run_bilstm(bilstm: nn.LSTM, inputs: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """BiLSTM over padded sequences; padded rows come back as zeros."""
    lengths = mask.sum(dim=-1).cpu()
    packed = nn.utils.rnn.pack_padded_sequence(
        inputs, lengths, batch_first=True, enforce_sorted=False
    )
    out, _ = bilstm(packed)
    padded, _ = nn.utils.rnn.pad_packed_sequence(
        out, batch_first=True, total_length=inputs.shape[1]
    )
    return padded


class FrameDecoder(nn.Module):
    """Pointer-network decoder emitting one event frame per step."""

    def __init__(self, d_h: int, d_p: int, num_event_types: int, num_roles: int):
        super().__init__()
        self.d_h = d_h
        self.d_p = d_p
        self.num_event_types = num_event_types
        self.num_roles = num_roles
        d_tup = 8 * d_p

        self.attn_query = nn.Linear(d_h + d_tup, d_h)
        self.attn_key = nn.Linear(d_h, d_h)
        self.attn_v = nn.Linear(d_h, 1, bias=False)

        self.cell = nn.LSTMCell(d_h + d_tup, d_h)

        self.trigger_bilstm = nn.LSTM(2 * d_h, d_p, batch_first=True, bidirectional=True)
        self.trigger_start = nn.Linear(2 * d_p, 1)
        self.trigger_end = nn.Linear(2 * d_p, 1)

        self.argument_bilstm = nn.LSTM(2 * d_p + 2 * d_h, d_p, batch_first=True,
                                       bidirectional=True)
        self.argument_start = nn.Linear(2 * d_p, 1)
        self.argument_end = nn.Linear(2 * d_p, 1)

        self.event_head = nn.Linear(4 * d_p + d_h, num_event_types + 1)
        self.role_head = nn.Linear(8 * d_p + d_h, num_roles + 1)

    def init_state(self, batch_size: int, device=None, dtype=None) -> DecoderState:
        ref = self.cell.weight_hh
        device = device or ref.device
        dtype = dtype or ref.dtype
        zeros = lambda w: torch.zeros(batch_size, w, device=device, dtype=dtype)
        return DecoderState(h=zeros(self.d_h), c=zeros(self.d_h),
                            etup_prev=zeros(8 * self.d_p), step=0)

    def attend(self, encodings: TokenEncodings, state: DecoderState) -> torch.Tensor:
        """Attention-weighted sentence summary e_t, (B, d_h)."""
        enc = encodings.batched
        query = torch.cat([state.h, state.etup_prev], dim=-1)
        scores = self.attn_v(
            torch.tanh(self.attn_query(query).unsqueeze(1) + self.attn_key(enc.matrix))
        ).squeeze(-1)
        weights = masked_softmax(scores, enc.mask)
        return torch.einsum("bn,bnd->bd", weights, enc.matrix)

    def lstm_step(self, e_t: torch.Tensor, state: DecoderState) -> DecoderState:
        """Advance the frame-sequence LSTM on [e_t ; etup_prev]."""
        h, c = self.cell(torch.cat([e_t, state.etup_prev], dim=-1), (state.h, state.c))
        return replace(state, h=h, c=c, step=state.step + 1)

    def trigger_pointer(self, encodings: TokenEncodings, h_dec: torch.Tensor):
        """Start/end distributions for the trigger span.

        Returns (s_tr_prob, e_tr_prob, h_pt) with h_pt the pointer
        BiLSTM's per-token states, (B, N, 2*d_p).
        """
        enc = encodings.batched
        n = enc.matrix.shape[1]
        inputs = torch.cat([h_dec.unsqueeze(1).expand(-1, n, -1), enc.matrix], dim=-1)
        h_pt = _run_bilstm(self.trigger_bilstm, inputs, enc.mask)
        s_prob = masked_softmax(self.trigger_start(h_pt).squeeze(-1), enc.mask)
        e_prob = masked_softmax(self.trigger_end(h_pt).squeeze(-1), enc.mask)
        return s_prob, e_prob, h_pt

    def argument_pointer(self, encodings: TokenEncodings, h_pt: torch.Tensor,
                         h_dec: torch.Tensor):
        """Start/end distributions for the argument span, fed the trigger
        pointer's states to expose trigger/argument inter-dependence."""
        enc = encodings.batched
        n = enc.matrix.shape[1]
        inputs = torch.cat(
            [h_pt, h_dec.unsqueeze(1).expand(-1, n, -1), enc.matrix], dim=-1
        )
        h_pa = _run_bilstm(self.argument_bilstm, inputs, enc.mask)
        s_prob = masked_softmax(self.argument_start(h_pa).squeeze(-1), enc.mask)
        e_prob = masked_softmax(self.argument_end(h_pa).squeeze(-1), enc.mask)
        return s_prob, e_prob, h_pa

    @staticmethod
    def phrase_vectors(s_tr, e_tr, s_ar, e_ar, h_pt, h_pa):
        """Probability-weighted phrase vectors (ev, arg), each (B, 4*d_p)."""
        mix = lambda prob, h: torch.einsum("bn,bnd->bd", prob, h)
        ev = torch.cat([mix(s_tr, h_pt), mix(e_tr, h_pt)], dim=-1)
        arg = torch.cat([mix(s_ar, h_pa), mix(e_ar, h_pa)], dim=-1)
        return ev, arg

    def classify_event(self, ev: torch.Tensor, h_dec: torch.Tensor) -> torch.Tensor:
        """Distribution over event types incl. the null type, (B, p+1)."""
        return torch.softmax(self.event_head(torch.cat([ev, h_dec], dim=-1)), dim=-1)

    def classify_role(self, ev: torch.Tensor, arg: torch.Tensor,
                      h_dec: torch.Tensor) -> torch.Tensor:
        """Distribution over roles incl. NA, (B, r+1); conditioning on both
        phrase vectors captures event-role and argument-role coupling."""
        return torch.softmax(self.role_head(torch.cat([ev, arg, h_dec], dim=-1)), dim=-1)

    def step(self, encodings: TokenEncodings, state: DecoderState):
        """Run one full decode step; returns (StepOutput, next state)."""
        e_t = self.attend(encodings, state)
        state = self.lstm_step(e_t, state)
        s_tr, e_tr, h_pt = self.trigger_pointer(encodings, state.h)
        s_ar, e_ar, h_pa = self.argument_pointer(encodings, h_pt, state.h)
        ev, arg = self.phrase_vectors(s_tr, e_tr, s_ar, e_ar, h_pt, h_pa)
        out = StepOutput(
            s_tr_prob=s_tr, e_tr_prob=e_tr, s_ar_prob=s_ar, e_ar_prob=e_ar,
            etype_prob=self.classify_event(ev, state.h),
            role_prob=self.classify_role(ev, arg, state.h),
            ev=ev, arg=arg,
        )
        state = replace(state, etup_prev=state.etup_prev + torch.cat([ev, arg], dim=-1))
        return out, state
