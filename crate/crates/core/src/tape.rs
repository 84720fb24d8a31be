//! Reverse-mode differentiation over random variables.
//!
//! A [`Tape`] records every operation of a valuation as a node holding its
//! path-wise value. [`Tape::backward`] sweeps the nodes in reverse order and
//! accumulates path-wise adjoints. When the sweep reaches an indicator node
//! it hands the stored trigger and the incoming adjoint to an
//! [`IndicatorDiffStrategy`], which decides what replaces the (distributional)
//! derivative of `1_{X>0}`.
//!
//! Adjoints are returned before the final expectation, so the caller can
//! inspect them path by path.

use std::cell::RefCell;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::indicator::{self, IndicatorDiffStrategy};
use crate::random_variable::RandomVariable;

static NEXT_TAPE: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    tape: u64,
    index: usize,
}

impl NodeId {
    pub fn index(&self) -> usize {
        self.index
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    /// Differentiable leaf (a model parameter).
    Input,
    /// Leaf that never receives an adjoint.
    Constant,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Exp,
    Log,
    Sqrt,
    /// `max(a, b)`; the sub-gradient goes to `a` where `a > b`, else to `b`.
    Max,
    /// `1_{X > 0}`.
    Indicator,
}

impl OpKind {
    fn arity(self) -> usize {
        match self {
            OpKind::Input | OpKind::Constant => 0,
            OpKind::Neg | OpKind::Exp | OpKind::Log | OpKind::Sqrt | OpKind::Indicator => 1,
            OpKind::Add | OpKind::Sub | OpKind::Mul | OpKind::Div | OpKind::Max => 2,
        }
    }
}

#[derive(Debug)]
struct Node {
    kind: OpKind,
    parents: Vec<usize>,
    value: RandomVariable,
    /// The trigger `X` of an indicator node, kept verbatim for the strategy.
    trigger: Option<RandomVariable>,
}

/// Operation record of a single valuation.
#[derive(Debug)]
pub struct Tape {
    id: u64,
    nodes: RefCell<Vec<Node>>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

/// Path-wise adjoints `d result / d node` of one backward sweep.
#[derive(Debug, Clone)]
pub struct AdjointResult {
    tape: u64,
    adjoints: Vec<Option<RandomVariable>>,
    /// Indicator nodes whose window held no path; their contribution is zero.
    pub empty_windows: Vec<NodeId>,
}

impl AdjointResult {
    /// Adjoint of `node`; nodes the result does not depend on get zero.
    pub fn adjoint(&self, node: NodeId) -> Result<RandomVariable> {
        if node.tape != self.tape {
            return Err(Error::ForeignTape(node));
        }
        match self.adjoints.get(node.index) {
            None => Err(Error::UnknownNode(node)),
            Some(a) => Ok(a.clone().unwrap_or_else(|| RandomVariable::constant(0.0))),
        }
    }

    /// `E(adjoint(node))`.
    pub fn derivative(&self, node: NodeId) -> Result<f64> {
        Ok(self.adjoint(node)?.expectation())
    }

    pub fn is_flagged(&self) -> bool {
        !self.empty_windows.is_empty()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            id: NEXT_TAPE.fetch_add(1, Ordering::Relaxed),
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, id: NodeId) -> Result<usize> {
        if id.tape != self.id {
            return Err(Error::ForeignTape(id));
        }
        if id.index >= self.len() {
            return Err(Error::UnknownNode(id));
        }
        Ok(id.index)
    }

    fn id_of(&self, index: usize) -> NodeId {
        NodeId {
            tape: self.id,
            index,
        }
    }

    /// Appends a node computed elsewhere. Parents must already be on this tape.
    pub fn record(
        &self,
        kind: OpKind,
        parents: &[NodeId],
        value: RandomVariable,
    ) -> Result<NodeId> {
        if parents.len() != kind.arity() {
            return Err(Error::InvalidParameter {
                name: "parents",
                detail: format!(
                    "{kind:?} takes {} parents, got {}",
                    kind.arity(),
                    parents.len()
                ),
            });
        }
        let parents = parents
            .iter()
            .map(|&p| self.check(p))
            .collect::<Result<Vec<_>>>()?;
        let mut nodes = self.nodes.borrow_mut();
        let trigger = (kind == OpKind::Indicator).then(|| nodes[parents[0]].value.clone());
        nodes.push(Node {
            kind,
            parents,
            value,
            trigger,
        });
        Ok(self.id_of(nodes.len() - 1))
    }

    pub fn input(&self, value: impl Into<RandomVariable>) -> Var<'_> {
        self.leaf(OpKind::Input, value.into())
    }

    pub fn constant(&self, value: impl Into<RandomVariable>) -> Var<'_> {
        self.leaf(OpKind::Constant, value.into())
    }

    fn leaf(&self, kind: OpKind, value: RandomVariable) -> Var<'_> {
        let id = self
            .record(kind, &[], value.clone())
            .expect("leaf nodes have no parents");
        Var {
            tape: self,
            id,
            value,
        }
    }

    pub fn value(&self, id: NodeId) -> Result<RandomVariable> {
        let i = self.check(id)?;
        Ok(self.nodes.borrow()[i].value.clone())
    }

    pub fn kind(&self, id: NodeId) -> Result<OpKind> {
        let i = self.check(id)?;
        Ok(self.nodes.borrow()[i].kind)
    }

    pub fn parents(&self, id: NodeId) -> Result<Vec<NodeId>> {
        let i = self.check(id)?;
        Ok(self.nodes.borrow()[i]
            .parents
            .iter()
            .map(|&p| self.id_of(p))
            .collect())
    }

    /// Trigger stored on an indicator node.
    pub fn trigger(&self, id: NodeId) -> Result<RandomVariable> {
        let i = self.check(id)?;
        self.nodes.borrow()[i]
            .trigger
            .clone()
            .ok_or(Error::NotIndicator(id))
    }

    /// Reverse sweep from `result`, seeded with the constant adjoint 1.
    pub fn backward(
        &self,
        result: NodeId,
        strategy: &IndicatorDiffStrategy,
    ) -> Result<AdjointResult> {
        strategy.validate()?;
        self.sweep(result, strategy, None)
    }

    /// `E(d result / d input)` with the indicator derivative supplied by `strategy`.
    pub fn derivative_of_expectation(
        &self,
        result: NodeId,
        input: NodeId,
        strategy: &IndicatorDiffStrategy,
    ) -> Result<f64> {
        self.check(input)?;
        self.backward(result, strategy)?.derivative(input)
    }

    /// Adjoint `A` arriving at an indicator, extracted as `A1 - A0` from two
    /// sweeps in which the derivative of that indicator is replaced by 1 and
    /// by 0, measured at its trigger. Other indicators use `strategy`.
    pub fn adjoint_at_indicator_via_two_runs(
        &self,
        result: NodeId,
        indicator: NodeId,
        strategy: &IndicatorDiffStrategy,
    ) -> Result<RandomVariable> {
        let i = self.check(indicator)?;
        let trigger = {
            let nodes = self.nodes.borrow();
            if nodes[i].kind != OpKind::Indicator {
                return Err(Error::NotIndicator(indicator));
            }
            self.id_of(nodes[i].parents[0])
        };
        strategy.validate()?;
        let one = self
            .sweep(result, strategy, Some((i, 1.0)))?
            .adjoint(trigger)?;
        let zero = self
            .sweep(result, strategy, Some((i, 0.0)))?
            .adjoint(trigger)?;
        one.sub(&zero)
    }

    fn sweep(
        &self,
        result: NodeId,
        strategy: &IndicatorDiffStrategy,
        replaced: Option<(usize, f64)>,
    ) -> Result<AdjointResult> {
        let root = self.check(result)?;
        let nodes = self.nodes.borrow();

        // Only nodes downstream of an input (or of the replaced indicator's
        // trigger) need adjoints.
        let mut active = vec![false; root + 1];
        for (i, node) in nodes[..=root].iter().enumerate() {
            active[i] = node.kind == OpKind::Input || node.parents.iter().any(|&p| active[p]);
        }
        if let Some((i, _)) = replaced {
            if i <= root {
                activate_from(&nodes, nodes[i].parents[0], &mut active);
            }
        }

        let mut adjoints: Vec<Option<RandomVariable>> = vec![None; nodes.len()];
        adjoints[root] = Some(RandomVariable::constant(1.0));
        let mut empty_windows = Vec::new();

        for i in (0..=root).rev() {
            let Some(g) = adjoints[i].clone() else {
                continue;
            };
            let node = &nodes[i];
            let parent_value = |k: usize| &nodes[node.parents[k]].value;
            let at_node = |e: Error| Error::AtNode {
                node: self.id_of(i),
                source: Box::new(e),
            };
            let contributions: Vec<(usize, RandomVariable)> = match node.kind {
                OpKind::Input | OpKind::Constant => continue,
                OpKind::Add => vec![(0, g.clone()), (1, g)],
                OpKind::Sub => vec![(0, g.clone()), (1, g.neg())],
                OpKind::Mul => vec![
                    (0, g.mul(parent_value(1)).map_err(at_node)?),
                    (1, g.mul(parent_value(0)).map_err(at_node)?),
                ],
                OpKind::Div => {
                    let b = parent_value(1);
                    vec![
                        (0, g.div(b).map_err(at_node)?),
                        (
                            1,
                            g.mul(&node.value)
                                .map_err(at_node)?
                                .div(b)
                                .map_err(at_node)?
                                .neg(),
                        ),
                    ]
                }
                OpKind::Neg => vec![(0, g.neg())],
                OpKind::Exp => vec![(0, g.mul(&node.value).map_err(at_node)?)],
                OpKind::Log => vec![(0, g.div(parent_value(0)).map_err(at_node)?)],
                OpKind::Sqrt => {
                    let half_inv = node.value.map(|v| 0.5 / v);
                    vec![(0, g.mul(&half_inv).map_err(at_node)?)]
                }
                OpKind::Max => {
                    let a_wins = parent_value(0)
                        .zip_with(parent_value(1), "max", |a, b| if a > b { 1.0 } else { 0.0 })
                        .map_err(at_node)?;
                    let b_wins = a_wins.map(|s| 1.0 - s);
                    vec![
                        (0, g.mul(&a_wins).map_err(at_node)?),
                        (1, g.mul(&b_wins).map_err(at_node)?),
                    ]
                }
                OpKind::Indicator => {
                    if !active[node.parents[0]] {
                        continue;
                    }
                    let trigger = node.trigger.as_ref().expect("indicator stores its trigger");
                    let local = match replaced {
                        Some((r, c)) if r == i => indicator::indicator_adjoint(
                            trigger,
                            &g,
                            &IndicatorDiffStrategy::Constant(c),
                        ),
                        _ => indicator::indicator_adjoint(trigger, &g, strategy),
                    };
                    match local {
                        Ok(c) => vec![(0, c)],
                        Err(Error::EmptyWindow { .. }) => {
                            empty_windows.push(self.id_of(i));
                            continue;
                        }
                        Err(e) => return Err(at_node(e)),
                    }
                }
            };
            for (k, contribution) in contributions {
                let p = node.parents[k];
                if !active[p] {
                    continue;
                }
                adjoints[p] = Some(match adjoints[p].take() {
                    None => contribution,
                    Some(prev) => prev.add(&contribution).map_err(at_node)?,
                });
            }
        }

        Ok(AdjointResult {
            tape: self.id,
            adjoints,
            empty_windows,
        })
    }
}

/// Activates `start` and every node downstream of it.
fn activate_from(nodes: &[Node], start: usize, active: &mut [bool]) {
    active[start] = true;
    for i in start + 1..active.len() {
        if nodes[i].parents.iter().any(|&p| active[p]) {
            active[i] = true;
        }
    }
}

/// A value recorded on a tape.
#[derive(Debug, Clone)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: NodeId,
    value: RandomVariable,
}

impl<'t> Var<'t> {
    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn value(&self) -> &RandomVariable {
        &self.value
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    fn same_tape(&self, other: &Var<'_>) -> Result<()> {
        if std::ptr::eq(self.tape, other.tape) {
            Ok(())
        } else {
            Err(Error::ForeignTape(other.id))
        }
    }

    fn unary(&self, kind: OpKind, value: RandomVariable) -> Result<Var<'t>> {
        let id = self.tape.record(kind, &[self.id], value.clone())?;
        Ok(Var {
            tape: self.tape,
            id,
            value,
        })
    }

    fn binary(&self, other: &Var<'_>, kind: OpKind, value: RandomVariable) -> Result<Var<'t>> {
        self.same_tape(other)?;
        let id = self
            .tape
            .record(kind, &[self.id, other.id], value.clone())?;
        Ok(Var {
            tape: self.tape,
            id,
            value,
        })
    }

    pub fn add(&self, other: &Var<'_>) -> Result<Var<'t>> {
        self.binary(other, OpKind::Add, self.value.add(&other.value)?)
    }

    pub fn sub(&self, other: &Var<'_>) -> Result<Var<'t>> {
        self.binary(other, OpKind::Sub, self.value.sub(&other.value)?)
    }

    pub fn mul(&self, other: &Var<'_>) -> Result<Var<'t>> {
        self.binary(other, OpKind::Mul, self.value.mul(&other.value)?)
    }

    pub fn div(&self, other: &Var<'_>) -> Result<Var<'t>> {
        self.binary(other, OpKind::Div, self.value.div(&other.value)?)
    }

    pub fn max(&self, other: &Var<'_>) -> Result<Var<'t>> {
        self.binary(other, OpKind::Max, self.value.max(&other.value)?)
    }

    pub fn add_scalar(&self, c: f64) -> Result<Var<'t>> {
        self.add(&self.tape.constant(c))
    }

    pub fn sub_scalar(&self, c: f64) -> Result<Var<'t>> {
        self.sub(&self.tape.constant(c))
    }

    pub fn mul_scalar(&self, c: f64) -> Result<Var<'t>> {
        self.mul(&self.tape.constant(c))
    }

    pub fn max_scalar(&self, c: f64) -> Result<Var<'t>> {
        self.max(&self.tape.constant(c))
    }

    pub fn neg(&self) -> Result<Var<'t>> {
        self.unary(OpKind::Neg, self.value.neg())
    }

    pub fn exp(&self) -> Result<Var<'t>> {
        self.unary(OpKind::Exp, self.value.exp())
    }

    pub fn log(&self) -> Result<Var<'t>> {
        self.unary(OpKind::Log, self.value.log()?)
    }

    pub fn sqrt(&self) -> Result<Var<'t>> {
        self.unary(OpKind::Sqrt, self.value.sqrt()?)
    }

    /// `1_{self > 0}`; the node keeps `self` as its trigger.
    pub fn indicator(&self) -> Result<Var<'t>> {
        self.unary(OpKind::Indicator, self.value.indicator())
    }
}
