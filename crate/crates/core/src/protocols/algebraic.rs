use crate::engine::{Action, Intent, PartnerSelector, Protocol};
use crate::error::{param, Result};
use crate::field::{CodedMessage, EquationBasis, Field, FieldElement};
use crate::graph::Topology;
use crate::rng::SimRng;

use super::Placement;

/// Algebraic gossip: every transmission is a random linear combination of
/// the sender's stored equations, and a node finishes at rank k.
#[derive(Clone, Debug)]
pub struct AlgebraicGossip<F: Field> {
    k: usize,
    bases: Vec<EquationBasis<F>>,
    finished: usize,
    selector: PartnerSelector,
    action: Action,
}

impl<F: Field> AlgebraicGossip<F> {
    /// Builds node states from a placement. With `payloads`, message i
    /// carries `payloads[i]` and the bases can be decoded.
    pub fn new(
        field: F,
        n: usize,
        placement: &Placement,
        payloads: Option<&[Vec<FieldElement>]>,
        selector: PartnerSelector,
        action: Action,
    ) -> Result<Self> {
        let k = placement.k();
        if let Some(p) = payloads {
            if p.len() != k {
                return Err(param(format!("{} payloads for k={k}", p.len())));
            }
        }
        let mut bases: Vec<_> = (0..n).map(|_| EquationBasis::new(field, k)).collect();
        for &(m, v) in placement.holders() {
            if v >= n {
                return Err(param(format!("placement node {v} out of range for n={n}")));
            }
            let payload = payloads.map(|p| p[m].clone());
            bases[v].try_insert(CodedMessage::unit(&field, k, m, payload))?;
        }
        let finished = bases.iter().filter(|b| b.is_full()).count();
        Ok(AlgebraicGossip { k, bases, finished, selector, action })
    }

    /// Uniform partner selection with EXCHANGE.
    pub fn uniform(field: F, n: usize, placement: &Placement, payloads: Option<&[Vec<FieldElement>]>) -> Result<Self> {
        Self::new(field, n, placement, payloads, PartnerSelector::uniform(), Action::Exchange)
    }

    pub fn with_action(mut self, action: Action) -> Self {
        self.action = action;
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn basis(&self, v: usize) -> &EquationBasis<F> {
        &self.bases[v]
    }

    pub fn bases(&self) -> &[EquationBasis<F>] {
        &self.bases
    }

    pub fn rank(&self, v: usize) -> usize {
        self.bases[v].rank()
    }

    pub fn finished_count(&self) -> usize {
        self.finished
    }

    /// Random combination of `v`'s equations, or `None` if `v` has none.
    pub fn encode(&self, v: usize, rng: &mut SimRng) -> Option<CodedMessage<F>> {
        self.bases[v].random_combination(rng).ok()
    }

    /// Like [`encode`](Self::encode), but sends nothing to a node that
    /// already has every message.
    pub fn encode_for(&self, v: usize, to: usize, rng: &mut SimRng) -> Option<CodedMessage<F>> {
        if self.bases[to].is_full() {
            None
        } else {
            self.encode(v, rng)
        }
    }

    /// Inserts into `v`'s basis; returns whether the message was helpful.
    pub fn absorb(&mut self, v: usize, msg: CodedMessage<F>) -> bool {
        let helpful = self.bases[v].try_insert(msg).expect("message width matches k");
        if helpful && self.bases[v].is_full() {
            self.finished += 1;
        }
        helpful
    }
}

impl<F: Field> Protocol for AlgebraicGossip<F> {
    type Message = CodedMessage<F>;
    type Channel = ();

    fn n(&self) -> usize {
        self.bases.len()
    }

    fn on_wakeup(&mut self, g: &Topology, v: usize, rng: &mut SimRng) -> Option<Intent<()>> {
        let partner = self.selector.next(g, v, None, rng)?;
        Some(Intent { partner, action: self.action, channel: () })
    }

    fn compose(&self, from: usize, to: usize, _channel: (), rng: &mut SimRng) -> Option<CodedMessage<F>> {
        self.encode_for(from, to, rng)
    }

    fn deliver(&mut self, to: usize, _from: usize, _channel: (), msg: CodedMessage<F>) -> bool {
        self.absorb(to, msg)
    }

    fn node_done(&self, v: usize) -> bool {
        self.bases[v].is_full()
    }

    fn is_done(&self) -> bool {
        self.finished == self.bases.len()
    }
}
