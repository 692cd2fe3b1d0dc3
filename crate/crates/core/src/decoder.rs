//! Tuple decoder.
//!
//! One step of the decoder produces every component of one event frame:
//!
//! 1. additive attention over the token encodings, queried by the previous
//!    hidden state and the running sum of earlier frame vectors;
//! 2. an LSTM cell over the attended summary;
//! 3. a trigger pointer (BiLSTM over `[h_D ⊕ h_E_i]`, start and end heads);
//! 4. an argument pointer (BiLSTM over `[h_pt_i ⊕ h_D ⊕ h_E_i]`);
//! 5. event-type and role classifiers over the soft phrase vectors.
//!
//! All operations work on a whole padded batch at once.

use candle_core::{Module, Tensor, D};
use candle_nn::Linear;
use serde::{Deserialize, Serialize};

use crate::encoder::TokenEncodings;
use crate::error::{Error, Result};
use crate::nn::{masked_softmax, softmax, weighted_sum, BiLstm, LstmCell, ParamBuilder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderConfig {
    /// Hidden width of each pointer BiLSTM direction.
    pub d_p: usize,
    /// Attention projection width; defaults to the token-encoding width.
    pub attention_dim: Option<usize>,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            d_p: 968,
            attention_dim: None,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_p == 0 || self.attention_dim == Some(0) {
            return Err(Error::Config("decoder widths must be positive".into()));
        }
        Ok(())
    }
}

/// Recurrent state carried between steps.
#[derive(Debug, Clone)]
pub struct DecoderState {
    /// `[B, d_h]`
    pub h: Tensor,
    /// `[B, d_h]`
    pub c: Tensor,
    /// Sum of all earlier frame vectors, `[B, 8·d_p]`.
    pub etup_prev: Tensor,
    pub step: usize,
}

/// Distributions and phrase vectors of one step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    /// `[B, n]` each.
    pub trigger_start: Tensor,
    pub trigger_end: Tensor,
    pub argument_start: Tensor,
    pub argument_end: Tensor,
    /// `[B, p+1]`
    pub event_type: Tensor,
    /// `[B, r+1]`
    pub role: Tensor,
    /// `[B, 4·d_p]` each.
    pub ev: Tensor,
    pub arg: Tensor,
}

/// Step-independent projections of the token encodings.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub encodings: TokenEncodings,
    keys: Tensor,
    trigger_fwd: Tensor,
    trigger_bwd: Tensor,
    argument_fwd: Tensor,
    argument_bwd: Tensor,
}

#[derive(Debug)]
pub struct Decoder {
    d_h: usize,
    d_p: usize,
    w_query: Linear,
    w_key: Linear,
    v: Linear,
    lstm: LstmCell,
    trigger: BiLstm,
    trigger_start: Linear,
    trigger_end: Linear,
    argument: BiLstm,
    argument_start: Linear,
    argument_end: Linear,
    event_head: Linear,
    role_head: Linear,
}

impl Decoder {
    pub fn new(
        b: &ParamBuilder,
        config: &DecoderConfig,
        d_h: usize,
        event_classes: usize,
        role_classes: usize,
    ) -> Result<Self> {
        config.validate()?;
        let d_p = config.d_p;
        let d_a = config.attention_dim.unwrap_or(d_h);
        let tuple = 8 * d_p;
        Ok(Decoder {
            d_h,
            d_p,
            w_query: b.linear(d_h + tuple, d_a, "attn.query", false)?,
            w_key: b.linear(d_h, d_a, "attn.key", true)?,
            v: b.linear(d_a, 1, "attn.v", false)?,
            lstm: LstmCell::new(&b.pp("lstm"), d_h + tuple, d_h)?,
            trigger: BiLstm::new(&b.pp("trigger"), 2 * d_h, d_p)?,
            trigger_start: b.linear(2 * d_p, 1, "trigger.start", true)?,
            trigger_end: b.linear(2 * d_p, 1, "trigger.end", true)?,
            argument: BiLstm::new(&b.pp("argument"), 2 * d_p + 2 * d_h, d_p)?,
            argument_start: b.linear(2 * d_p, 1, "argument.start", true)?,
            argument_end: b.linear(2 * d_p, 1, "argument.end", true)?,
            event_head: b.linear(4 * d_p + d_h, event_classes, "event", true)?,
            role_head: b.linear(8 * d_p + d_h, role_classes, "role", true)?,
        })
    }

    pub fn d_p(&self) -> usize {
        self.d_p
    }

    /// Zero state for a batch of `b` sentences.
    pub fn initial_state(&self, encodings: &TokenEncodings) -> Result<DecoderState> {
        let (b, _, _) = encodings.dims()?;
        let zeros = |w: usize| Tensor::zeros((b, w), encodings.h.dtype(), encodings.h.device());
        Ok(DecoderState {
            h: zeros(self.d_h)?,
            c: zeros(self.d_h)?,
            etup_prev: zeros(8 * self.d_p)?,
            step: 0,
        })
    }

    /// Precomputes everything that depends only on the token encodings.
    pub fn prepare(&self, encodings: &TokenEncodings) -> Result<Prepared> {
        let h = &encodings.h;
        let arg_offset = 2 * self.d_p + self.d_h;
        Ok(Prepared {
            keys: self.w_key.forward(h)?,
            trigger_fwd: self.trigger.forward.project(h, self.d_h)?,
            trigger_bwd: self.trigger.backward.project(h, self.d_h)?,
            argument_fwd: self.argument.forward.project(h, arg_offset)?,
            argument_bwd: self.argument.backward.project(h, arg_offset)?,
            encodings: encodings.clone(),
        })
    }

    /// Attention-weighted sentence summary `e_t`, `[B, d_h]`.
    pub fn attend(&self, prep: &Prepared, state: &DecoderState) -> Result<Tensor> {
        let query = self
            .w_query
            .forward(&Tensor::cat(&[&state.h, &state.etup_prev], D::Minus1)?)?;
        let scores = self
            .v
            .forward(&prep.keys.broadcast_add(&query.unsqueeze(1)?)?.tanh()?)?
            .squeeze(D::Minus1)?;
        let weights = masked_softmax(&scores, &prep.encodings.mask)?;
        weighted_sum(&weights, &prep.encodings.h)
    }

    /// LSTM update on input `e_t ⊕ eTup_prev`.
    pub fn lstm_step(&self, e_t: &Tensor, state: &DecoderState) -> Result<DecoderState> {
        let input = Tensor::cat(&[e_t, &state.etup_prev], D::Minus1)?;
        let (h, c) = self
            .lstm
            .step(&self.lstm.project_all(&input)?, &state.h, &state.c)?;
        Ok(DecoderState {
            h,
            c,
            etup_prev: state.etup_prev.clone(),
            step: state.step + 1,
        })
    }

    /// Trigger start/end distributions and the BiLSTM outputs `h_pt`.
    pub fn trigger_pointer(&self, prep: &Prepared, h_d: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
        let fwd = prep
            .trigger_fwd
            .broadcast_add(&self.trigger.forward.project(h_d, 0)?.unsqueeze(1)?)?;
        let bwd = prep
            .trigger_bwd
            .broadcast_add(&self.trigger.backward.project(h_d, 0)?.unsqueeze(1)?)?;
        let h_pt = self.trigger.run(&fwd, &bwd, &prep.encodings.mask)?;
        let (start, end) = self.heads(&h_pt, &self.trigger_start, &self.trigger_end, &prep.encodings.mask)?;
        Ok((start, end, h_pt))
    }

    /// Argument start/end distributions and the BiLSTM outputs `h_pa`.
    pub fn argument_pointer(
        &self,
        prep: &Prepared,
        h_pt: &Tensor,
        h_d: &Tensor,
    ) -> Result<(Tensor, Tensor, Tensor)> {
        let project = |cell: &LstmCell, base: &Tensor| -> Result<Tensor> {
            Ok(base
                .add(&cell.project(h_pt, 0)?)?
                .broadcast_add(&cell.project(h_d, 2 * self.d_p)?.unsqueeze(1)?)?)
        };
        let fwd = project(&self.argument.forward, &prep.argument_fwd)?;
        let bwd = project(&self.argument.backward, &prep.argument_bwd)?;
        let h_pa = self.argument.run(&fwd, &bwd, &prep.encodings.mask)?;
        let (start, end) = self.heads(&h_pa, &self.argument_start, &self.argument_end, &prep.encodings.mask)?;
        Ok((start, end, h_pa))
    }

    fn heads(&self, h: &Tensor, start: &Linear, end: &Linear, mask: &Tensor) -> Result<(Tensor, Tensor)> {
        let s = masked_softmax(&start.forward(h)?.squeeze(D::Minus1)?, mask)?;
        let e = masked_softmax(&end.forward(h)?.squeeze(D::Minus1)?, mask)?;
        Ok((s, e))
    }

    /// Soft phrase vectors `(ev_t, arg_t)`.
    #[allow(clippy::too_many_arguments)]
    pub fn phrase_vectors(
        &self,
        trigger_start: &Tensor,
        trigger_end: &Tensor,
        argument_start: &Tensor,
        argument_end: &Tensor,
        h_pt: &Tensor,
        h_pa: &Tensor,
    ) -> Result<(Tensor, Tensor)> {
        phrase_vectors(trigger_start, trigger_end, argument_start, argument_end, h_pt, h_pa)
    }

    pub fn classify_event(&self, ev: &Tensor, h_d: &Tensor) -> Result<Tensor> {
        softmax(&self.event_head.forward(&Tensor::cat(&[ev, h_d], D::Minus1)?)?)
    }

    pub fn classify_role(&self, ev: &Tensor, arg: &Tensor, h_d: &Tensor) -> Result<Tensor> {
        softmax(&self.role_head.forward(&Tensor::cat(&[ev, arg, h_d], D::Minus1)?)?)
    }

    /// One full decoding step.
    pub fn step(&self, prep: &Prepared, state: &DecoderState) -> Result<(StepOutput, DecoderState)> {
        let e_t = self.attend(prep, state)?;
        let mut next = self.lstm_step(&e_t, state)?;
        let (ts, te, h_pt) = self.trigger_pointer(prep, &next.h)?;
        let (as_, ae, h_pa) = self.argument_pointer(prep, &h_pt, &next.h)?;
        let (ev, arg) = phrase_vectors(&ts, &te, &as_, &ae, &h_pt, &h_pa)?;
        let event_type = self.classify_event(&ev, &next.h)?;
        let role = self.classify_role(&ev, &arg, &next.h)?;
        next.etup_prev = (&state.etup_prev + Tensor::cat(&[&ev, &arg], D::Minus1)?)?;
        Ok((
            StepOutput {
                trigger_start: ts,
                trigger_end: te,
                argument_start: as_,
                argument_end: ae,
                event_type,
                role,
                ev,
                arg,
            },
            next,
        ))
    }

    /// Runs `steps` decoding steps from the zero state.
    pub fn run(&self, encodings: &TokenEncodings, steps: usize) -> Result<Vec<StepOutput>> {
        let prep = self.prepare(encodings)?;
        let mut state = self.initial_state(encodings)?;
        let mut outputs = Vec::with_capacity(steps);
        for _ in 0..steps {
            let (out, next) = self.step(&prep, &state)?;
            outputs.push(out);
            state = next;
        }
        Ok(outputs)
    }
}

/// `ev = [Σ ŝ_i·h_pt_i ⊕ Σ ê_i·h_pt_i]`, and `arg` likewise over `h_pa`.
pub fn phrase_vectors(
    trigger_start: &Tensor,
    trigger_end: &Tensor,
    argument_start: &Tensor,
    argument_end: &Tensor,
    h_pt: &Tensor,
    h_pa: &Tensor,
) -> Result<(Tensor, Tensor)> {
    let ev = Tensor::cat(
        &[weighted_sum(trigger_start, h_pt)?, weighted_sum(trigger_end, h_pt)?],
        D::Minus1,
    )?;
    let arg = Tensor::cat(
        &[weighted_sum(argument_start, h_pa)?, weighted_sum(argument_end, h_pa)?],
        D::Minus1,
    )?;
    Ok((ev, arg))
}
