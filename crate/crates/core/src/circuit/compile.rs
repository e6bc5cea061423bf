//! Compilation of a [`CircuitSpec`] into a staged sequence of unitaries over
//! the global arm space, plus exhaustive path enumeration.

use ndarray::{Array1, Array2};

use crate::scalar::{phase, Real, C};

use super::{ArmLabel, CircuitError, CircuitSpec, Element, ElementKind, VACUUM_LABEL};

/// One element lifted to the full live-arm space.
///
/// `matrix` maps amplitudes on `in_labels` (columns) to amplitudes on
/// `out_labels` (rows); arms not touched by the element pass through on the
/// diagonal. Stage matrices are square: vacuum ports keep the live-arm count
/// constant across the whole circuit.
#[derive(Debug, Clone)]
pub struct Stage<R: Real> {
    pub element_index: usize,
    pub name: String,
    pub matrix: Array2<C<R>>,
    pub in_labels: Vec<ArmLabel>,
    pub out_labels: Vec<ArmLabel>,
}

impl<R: Real> Stage<R> {
    /// Max-norm of `U†U - I` for this stage.
    pub fn unitarity_defect(&self) -> R {
        let n = self.matrix.nrows();
        let adj = adjoint(&self.matrix);
        let prod = adj.dot(&self.matrix);
        let mut worst = R::zero();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { C::new(R::one(), R::zero()) } else { C::new(R::zero(), R::zero()) };
                let d = (prod[[i, j]] - want).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

/// A source-to-detector path: the arm labels traversed (source first,
/// detector last) and the product of couplings along the way.
#[derive(Debug, Clone)]
pub struct PathRecord<R: Real> {
    pub arms: Vec<ArmLabel>,
    pub amplitude: C<R>,
}

impl<R: Real> PathRecord<R> {
    /// Whether the path passes through the given arm.
    pub fn visits(&self, arm: &str) -> bool {
        self.arms.iter().any(|a| a == arm)
    }
}

/// The compiled model: one stage per element in topological order, the arm
/// labels live at every stage boundary, and the path table to the primary
/// detector.
///
/// Boundary `k` is the state after the first `k` stages; boundary 0 holds the
/// source arm and the hidden vacuum ports, boundary `stages.len()` the
/// terminal arms.
#[derive(Debug, Clone)]
pub struct StagedModel<R: Real> {
    pub spec: CircuitSpec<R>,
    pub stages: Vec<Stage<R>>,
    pub boundaries: Vec<Vec<ArmLabel>>,
    pub path_table: Vec<PathRecord<R>>,
}

impl<R: Real> CircuitSpec<R> {
    /// Compile into a [`StagedModel`]: one stage per element, ordered by a
    /// topological sort of arms.
    pub fn compile(&self) -> Result<StagedModel<R>, CircuitError> {
        self.validate()?;
        let order = self.topo_order()?;

        // Boundary 0: the source arm plus one hidden arm per vacuum port, in
        // stage order.
        let mut live: Vec<ArmLabel> = vec![self.source_arm.clone()];
        let mut vac_names: Vec<Vec<ArmLabel>> = vec![Vec::new(); self.elements.len()];
        let mut vac_counter = 0usize;
        for &ei in &order {
            for input in &self.elements[ei].inputs {
                if input == VACUUM_LABEL {
                    vac_counter += 1;
                    let name = format!("~vac{vac_counter}");
                    live.push(name.clone());
                    vac_names[ei].push(name);
                }
            }
        }

        let mut boundaries = vec![live.clone()];
        let mut stages = Vec::with_capacity(order.len());
        for &ei in &order {
            let el = &self.elements[ei];
            let in_labels = live.clone();
            let mut vacs = vac_names[ei].iter();
            let positions: Vec<usize> = el
                .inputs
                .iter()
                .map(|input| {
                    let label: &str = if input == VACUUM_LABEL { vacs.next().unwrap() } else { input };
                    in_labels.iter().position(|a| a == label).expect("validated input is live")
                })
                .collect();
            for (slot, &pos) in positions.iter().enumerate() {
                live[pos] = el.outputs[slot].clone();
            }
            let matrix = element_matrix(el, &positions, in_labels.len());
            stages.push(Stage {
                element_index: ei,
                name: el.name.clone(),
                matrix,
                in_labels,
                out_labels: live.clone(),
            });
            boundaries.push(live.clone());
        }

        let mut model = StagedModel { spec: self.clone(), stages, boundaries, path_table: Vec::new() };
        let detect = model.spec.detect_arm().clone();
        model.path_table = model.paths_to(&detect)?;
        Ok(model)
    }
}

fn element_matrix<R: Real>(el: &Element<R>, positions: &[usize], n: usize) -> Array2<C<R>> {
    let mut m = Array2::eye(n);
    match el.kind {
        ElementKind::BeamSplitter { theta, phi } => {
            let (p1, p2) = (positions[0], positions[1]);
            let c = C::new(theta.cos(), R::zero());
            let s = theta.sin();
            m[[p1, p1]] = c;
            m[[p1, p2]] = phase(phi) * s;
            m[[p2, p1]] = -phase(-phi) * s;
            m[[p2, p2]] = c;
        }
        ElementKind::Mirror => {
            // Identity phase by convention; mirrors exist to host couplings.
        }
        ElementKind::PhaseShift { value } => {
            m[[positions[0], positions[0]]] = phase(value);
        }
    }
    m
}

pub(crate) fn adjoint<R: Real>(m: &Array2<C<R>>) -> Array2<C<R>> {
    m.t().mapv(|z| z.conj())
}

impl<R: Real> StagedModel<R> {
    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    /// Number of live arms (constant across boundaries).
    pub fn dim(&self) -> usize {
        self.boundaries[0].len()
    }

    pub fn source_arm(&self) -> &ArmLabel {
        &self.spec.source_arm
    }

    pub fn detect_arm(&self) -> &ArmLabel {
        self.spec.detect_arm()
    }

    /// Arm labels live at boundary `k` (0 = before the first stage).
    pub fn live_at(&self, boundary: usize) -> &[ArmLabel] {
        &self.boundaries[boundary]
    }

    pub fn final_boundary(&self) -> &[ArmLabel] {
        self.boundaries.last().unwrap()
    }

    /// Position of `arm` within boundary `k`, if live there.
    pub fn index_at(&self, boundary: usize, arm: &str) -> Option<usize> {
        self.boundaries[boundary].iter().position(|a| a == arm)
    }

    /// Earliest boundary at which every label in `arms` is simultaneously
    /// live. Weak couplings attach there; for pass-through arms the choice of
    /// boundary within the live interval does not change any result.
    pub fn earliest_boundary_with(&self, arms: &[&str]) -> Option<usize> {
        (0..self.boundaries.len())
            .find(|&k| arms.iter().all(|a| self.index_at(k, a).is_some()))
    }

    /// Terminal arms: labels live at the final boundary.
    pub fn is_terminal(&self, arm: &str) -> bool {
        self.final_boundary().iter().any(|a| a == arm)
    }

    /// Worst per-stage max-norm of `U†U - I`.
    pub fn unitarity_defect(&self) -> R {
        self.stages
            .iter()
            .map(|s| s.unitarity_defect())
            .fold(R::zero(), |a, b| if b > a { b } else { a })
    }

    /// Apply stages to a boundary-0 amplitude vector, returning the vector at
    /// every boundary.
    pub fn propagate(&self, initial: Array1<C<R>>) -> Vec<Array1<C<R>>> {
        let mut states = Vec::with_capacity(self.stages.len() + 1);
        states.push(initial);
        for stage in &self.stages {
            let next = stage.matrix.dot(states.last().unwrap());
            states.push(next);
        }
        states
    }

    /// Apply adjoint stages to a final-boundary vector, returning the vector
    /// at every boundary (index 0 first).
    pub fn propagate_back(&self, fin: Array1<C<R>>) -> Vec<Array1<C<R>>> {
        let mut states = vec![fin];
        for stage in self.stages.iter().rev() {
            let next = adjoint(&stage.matrix).dot(states.last().unwrap());
            states.push(next);
        }
        states.reverse();
        states
    }

    /// Source-to-`arm` transfer amplitude of the composed stages.
    pub fn transfer_amplitude_to(&self, arm: &str) -> Result<C<R>, CircuitError> {
        let idx = self
            .index_at(self.num_stages(), arm)
            .ok_or_else(|| CircuitError::NoSuchArm(arm.to_string()))?;
        let mut v = Array1::zeros(self.dim());
        let src = self.index_at(0, self.source_arm()).expect("source is live at boundary 0");
        v[src] = C::new(R::one(), R::zero());
        let states = self.propagate(v);
        Ok(states.last().unwrap()[idx])
    }

    /// Source-to-primary-detector transfer amplitude.
    pub fn transfer_amplitude(&self) -> C<R> {
        self.transfer_amplitude_to(self.detect_arm())
            .expect("detect arm is terminal")
    }

    /// Exhaustive list of source-to-`target` paths with their amplitudes.
    ///
    /// Branches whose coupling is exactly zero are pruned; vacuum arms are
    /// unreachable from the source and never appear.
    pub fn paths_to(&self, target: &str) -> Result<Vec<PathRecord<R>>, CircuitError> {
        if self.index_at(self.num_stages(), target).is_none() {
            if self
                .boundaries
                .iter()
                .any(|b| b.iter().any(|a| a == target))
            {
                return Err(CircuitError::NotTerminal(target.to_string()));
            }
            return Err(CircuitError::NoSuchArm(target.to_string()));
        }

        // arm -> (consumer element, input slot)
        let mut consumer: std::collections::BTreeMap<&str, (usize, usize)> = std::collections::BTreeMap::new();
        for (ei, el) in self.spec.elements.iter().enumerate() {
            for (slot, input) in el.inputs.iter().enumerate() {
                if input != VACUUM_LABEL {
                    consumer.insert(input.as_str(), (ei, slot));
                }
            }
        }

        let one = C::new(R::one(), R::zero());
        let mut paths = Vec::new();
        let mut stack: Vec<(Vec<ArmLabel>, C<R>)> =
            vec![(vec![self.source_arm().clone()], one)];
        while let Some((arms, amp)) = stack.pop() {
            let here = arms.last().unwrap();
            match consumer.get(here.as_str()) {
                None => {
                    if here == target {
                        paths.push(PathRecord { arms, amplitude: amp });
                    }
                }
                Some(&(ei, slot)) => {
                    let el = &self.spec.elements[ei];
                    // Push in reverse so the first output is explored first.
                    for (out, coupling) in couplings(el, slot).into_iter().rev() {
                        if coupling.norm_sqr() == R::zero() {
                            continue;
                        }
                        let mut next = arms.clone();
                        next.push(out);
                        stack.push((next, amp * coupling));
                    }
                }
            }
        }
        Ok(paths)
    }
}

/// Per-output couplings of an element seen from input slot `slot`.
fn couplings<R: Real>(el: &Element<R>, slot: usize) -> Vec<(ArmLabel, C<R>)> {
    match el.kind {
        ElementKind::BeamSplitter { theta, phi } => {
            let c = C::new(theta.cos(), R::zero());
            let s = theta.sin();
            if slot == 0 {
                vec![
                    (el.outputs[0].clone(), c),
                    (el.outputs[1].clone(), -phase(-phi) * s),
                ]
            } else {
                vec![
                    (el.outputs[0].clone(), phase(phi) * s),
                    (el.outputs[1].clone(), c),
                ]
            }
        }
        ElementKind::Mirror => vec![(el.outputs[0].clone(), C::new(R::one(), R::zero()))],
        ElementKind::PhaseShift { value } => vec![(el.outputs[0].clone(), phase(value))],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use std::f64::consts::FRAC_1_SQRT_2;

    const BS5050: &str = "source arm=a\nbeamsplitter BS in=a,vac out=x,y theta=0.7853981633974483 phi=0.0\ndetect arm=x\n";

    #[test]
    fn empty_circuit_has_zero_stages_and_unit_transfer() {
        let model = parse_circuit::<f64>("source arm=a\ndetect arm=a").unwrap().compile().unwrap();
        assert_eq!(model.num_stages(), 0);
        assert_eq!(model.transfer_amplitude(), C::new(1.0, 0.0));
        assert_eq!(model.path_table.len(), 1);
        assert_eq!(model.path_table[0].arms, vec!["a".to_string()]);
    }

    #[test]
    fn single_5050_matrix_matches_convention() {
        let model = parse_circuit::<f64>(BS5050).unwrap().compile().unwrap();
        assert_eq!(model.num_stages(), 1);
        let m = &model.stages[0].matrix;
        let r = FRAC_1_SQRT_2;
        // rows/cols ordered (x,y) over (a, ~vac1)
        assert!((m[[0, 0]] - C::new(r, 0.0)).norm() < 1e-15);
        assert!((m[[0, 1]] - C::new(r, 0.0)).norm() < 1e-15);
        assert!((m[[1, 0]] - C::new(-r, 0.0)).norm() < 1e-15);
        assert!((m[[1, 1]] - C::new(r, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn single_5050_has_one_path_of_amplitude_inv_sqrt2() {
        let model = parse_circuit::<f64>(BS5050).unwrap().compile().unwrap();
        assert_eq!(model.path_table.len(), 1);
        assert!((model.path_table[0].amplitude - C::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn paths_to_nonterminal_arm_is_an_error() {
        let text = "source arm=a\nmirror M arm_in=a arm_out=b\ndetect arm=b\n";
        let model = parse_circuit::<f64>(text).unwrap().compile().unwrap();
        assert!(matches!(model.paths_to("a"), Err(CircuitError::NotTerminal(_))));
        assert!(matches!(model.paths_to("zz"), Err(CircuitError::NoSuchArm(_))));
    }

    #[test]
    fn phaseshift_multiplies_by_unit_phase() {
        let text = "source arm=a\nphaseshift P arm_in=a arm_out=b value=1.25\ndetect arm=b\n";
        let model = parse_circuit::<f64>(text).unwrap().compile().unwrap();
        let amp = model.transfer_amplitude();
        assert!((amp - C::from_polar(1.0, 1.25)).norm() < 1e-15);
        assert!(model.unitarity_defect() < 1e-15);
    }

    #[test]
    fn vacuum_ports_live_but_unreachable() {
        let model = parse_circuit::<f64>(BS5050).unwrap().compile().unwrap();
        assert_eq!(model.dim(), 2);
        assert!(model.live_at(0).iter().any(|a| a.starts_with('~')));
        assert!(model.path_table.iter().all(|p| p.arms.iter().all(|a| !a.starts_with('~'))));
    }
}
