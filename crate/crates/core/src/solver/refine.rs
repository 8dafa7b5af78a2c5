//! Joint refinement of all part poses of one instance under kinematic
//! constraints.
//!
//! The objective is
//!
//! ```text
//! E = Σ_k Σ_j ‖s·R_k·x_kj + t_k − y_kj‖²  +  μ · Σ_joints C(joint)
//! ```
//!
//! over per-part rotations and translations and one scale shared by the
//! whole instance. `x` are rest-frame coordinates recovered from predicted
//! NOCS, `y` the observed camera points. The joint penalties are
//!
//! * revolute: `‖R_c·u − R_p·u‖²` plus the squared distance of the child's
//!   pivot image from the parent's joint line;
//! * prismatic: `‖R_c − R_p‖²_F` plus the squared component of
//!   `t_c − t_p` orthogonal to the joint axis;
//! * fixed: `‖R_c − R_p‖²_F + ‖t_c − t_p‖²`.
//!
//! Axes and pivots are rest-frame quantities. An edge may carry them
//! directly (the category's kinematic tree); otherwise they are taken from
//! the held-fixed joint estimate, moved into the rest frame through the
//! initial parent pose.
//! Minimization is Gauss–Newton with Levenberg damping on the product of
//! rotation manifolds: each accepted step strictly lowers `E`.

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, SMatrix};

use crate::geometry::{skew, Similarity, Vec3};
use crate::kinematics::{ArticulatedModel, JointType};

use super::joints::JointEstimate;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub max_iters: usize,
    /// Step-norm threshold for convergence.
    pub tol: f64,
    /// Weight of the joint penalties.
    pub mu: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-10,
            mu: 1.0,
        }
    }
}

/// Joint of an edge expressed in rest object coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct RestJoint {
    pub joint_type: JointType,
    pub axis: Vec3,
    pub pivot: Vec3,
}

/// Parent → child edge of the kinematic tree, 1-based part indices.
#[derive(Clone, Debug, PartialEq)]
pub struct KinematicEdge {
    pub parent: usize,
    pub child: usize,
    pub rest: Option<RestJoint>,
}

impl KinematicEdge {
    /// Edge without rest-frame joint; the constraint then comes from the
    /// child's joint estimate.
    pub fn bare(parent: usize, child: usize) -> Self {
        Self {
            parent,
            child,
            rest: None,
        }
    }

    /// All edges of `model` with their rest-frame joints.
    pub fn from_model(model: &ArticulatedModel) -> Vec<KinematicEdge> {
        model
            .joints()
            .iter()
            .map(|j| KinematicEdge {
                parent: j.parent,
                child: j.child,
                rest: Some(RestJoint {
                    joint_type: j.joint_type,
                    axis: j.axis,
                    pivot: j.pivot,
                }),
            })
            .collect()
    }
}

/// Rest-frame source points and matching camera points of one part.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PartCorrespondence {
    pub src: Vec<Vec3>,
    pub dst: Vec<Vec3>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RefineStatus {
    Converged,
    NotConverged,
    NoConstraints,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineReport {
    pub status: RefineStatus,
    /// Objective at the start and after every accepted iteration.
    pub objective_history: Vec<f64>,
    /// Unweighted joint penalty before and after.
    pub constraint_before: f64,
    pub constraint_after: f64,
    pub iterations: usize,
    pub active_constraints: usize,
}

impl RefineReport {
    pub fn is_monotone(&self) -> bool {
        self.objective_history.windows(2).all(|w| w[1] <= w[0])
    }
}

struct Constraint {
    parent: usize,
    child: usize,
    kind: JointType,
    axis: Vec3,
    pivot: Vec3,
}

#[derive(Clone)]
struct State {
    rots: Vec<Rotation3<f64>>,
    trans: Vec<Vec3>,
    scale: f64,
}

impl State {
    fn retract(&self, step: &DVector<f64>) -> State {
        let p = self.rots.len();
        let mut next = self.clone();
        for i in 0..p {
            let w = Vec3::new(step[6 * i], step[6 * i + 1], step[6 * i + 2]);
            next.rots[i] = Rotation3::new(w) * self.rots[i];
            next.trans[i] += Vec3::new(step[6 * i + 3], step[6 * i + 4], step[6 * i + 5]);
        }
        next.scale = self.scale * step[6 * p].exp();
        next
    }
}

fn flatten(m: &Matrix3<f64>, out: &mut Vec<f64>) {
    out.extend(m.iter().copied());
}

fn constraint_residuals(state: &State, c: &Constraint, out: &mut Vec<f64>) {
    let (rp, rc) = (state.rots[c.parent].matrix(), state.rots[c.child].matrix());
    let (tp, tc) = (state.trans[c.parent], state.trans[c.child]);
    match c.kind {
        JointType::Revolute => {
            let a = rp * c.axis;
            out.extend((rc * c.axis - a).iter().copied());
            let pc = state.scale * (rc * c.pivot) + tc;
            let pp = state.scale * (rp * c.pivot) + tp;
            let d = pc - pp;
            out.extend((d - a * a.dot(&d)).iter().copied());
        }
        JointType::Prismatic => {
            flatten(&(rc - rp), out);
            let a = rp * c.axis;
            let d = tc - tp;
            out.extend((d - a * a.dot(&d)).iter().copied());
        }
        JointType::Fixed => {
            flatten(&(rc - rp), out);
            out.extend((tc - tp).iter().copied());
        }
    }
}

struct Problem<'a> {
    data: Vec<&'a PartCorrespondence>,
    constraints: Vec<Constraint>,
    mu: f64,
}

impl Problem<'_> {
    fn constraint_vector(&self, state: &State) -> Vec<f64> {
        let mut out = Vec::new();
        for c in &self.constraints {
            constraint_residuals(state, c, &mut out);
        }
        out
    }

    fn data_energy(&self, state: &State) -> f64 {
        self.data
            .iter()
            .enumerate()
            .map(|(i, corr)| {
                let (r, t, s) = (&state.rots[i], &state.trans[i], state.scale);
                corr.src
                    .iter()
                    .zip(&corr.dst)
                    .map(|(x, y)| (s * (r * x) + t - y).norm_squared())
                    .sum::<f64>()
            })
            .sum()
    }

    fn constraint_energy(&self, state: &State) -> f64 {
        self.constraint_vector(state).iter().map(|v| v * v).sum()
    }

    fn objective(&self, state: &State) -> f64 {
        self.data_energy(state) + self.mu * self.constraint_energy(state)
    }

    /// Gauss–Newton normal equations `(JᵀJ, Jᵀr)` at `state`.
    fn normal_equations(&self, state: &State) -> (DMatrix<f64>, DVector<f64>) {
        let p = state.rots.len();
        let n = 6 * p + 1;
        let mut h = DMatrix::zeros(n, n);
        let mut g = DVector::zeros(n);

        // analytic data block: r = sRx + t − y, left perturbation of R
        for (i, corr) in self.data.iter().enumerate() {
            let cols = [6 * i, 6 * i + 1, 6 * i + 2, 6 * i + 3, 6 * i + 4, 6 * i + 5, 6 * p];
            let mut hl = SMatrix::<f64, 7, 7>::zeros();
            let mut gl = SMatrix::<f64, 7, 1>::zeros();
            for (x, y) in corr.src.iter().zip(&corr.dst) {
                let w = state.scale * (state.rots[i] * x);
                let r = w + state.trans[i] - y;
                let mut j = SMatrix::<f64, 3, 7>::zeros();
                j.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-skew(&w)));
                j.fixed_view_mut::<3, 3>(0, 3).copy_from(&Matrix3::identity());
                j.fixed_view_mut::<3, 1>(0, 6).copy_from(&w);
                hl += j.transpose() * j;
                gl += j.transpose() * r;
            }
            for (a, &ca) in cols.iter().enumerate() {
                g[ca] += gl[a];
                for (b, &cb) in cols.iter().enumerate() {
                    h[(ca, cb)] += hl[(a, b)];
                }
            }
        }

        // numeric constraint block, central differences on the retraction
        if !self.constraints.is_empty() {
            let r0 = DVector::from_vec(self.constraint_vector(state));
            let m = r0.len();
            let mut jc = DMatrix::zeros(m, n);
            let eps = 1e-7;
            for col in 0..n {
                let mut step = DVector::zeros(n);
                step[col] = eps;
                let plus = self.constraint_vector(&state.retract(&step));
                step[col] = -eps;
                let minus = self.constraint_vector(&state.retract(&step));
                for row in 0..m {
                    jc[(row, col)] = (plus[row] - minus[row]) / (2.0 * eps);
                }
            }
            h += self.mu * jc.transpose() * &jc;
            g += self.mu * jc.transpose() * r0;
        }
        (h, g)
    }
}

/// Refines `poses` (one per part slot, `None` for absent parts) under the
/// joint penalties of every tree edge whose endpoints are both present and
/// whose joint is known, from the edge itself or from the child's estimate.
///
/// Returns the refined poses, all sharing one scale, and a report. With
/// no usable edge the poses are returned untouched with
/// [`RefineStatus::NoConstraints`].
pub fn constrained_refine(
    poses: &[Option<Similarity>],
    joints: &[Option<JointEstimate>],
    edges: &[KinematicEdge],
    data: &[Option<PartCorrespondence>],
    cfg: &RefineConfig,
) -> (Vec<Option<Similarity>>, RefineReport) {
    // present parts get dense slots
    let present: Vec<usize> = (0..poses.len())
        .filter(|&k| poses[k].is_some() && data.get(k).is_some_and(|d| d.is_some()))
        .collect();
    let slot_of = |part: usize| present.iter().position(|&k| k + 1 == part);

    let total_points: usize = present.iter().map(|&k| data[k].as_ref().unwrap().src.len()).sum();
    let scale = if total_points > 0 {
        present
            .iter()
            .map(|&k| poses[k].as_ref().unwrap().scale * data[k].as_ref().unwrap().src.len() as f64)
            .sum::<f64>()
            / total_points as f64
    } else {
        1.0
    };
    let state = State {
        rots: present.iter().map(|&k| poses[k].as_ref().unwrap().rotation).collect(),
        trans: present
            .iter()
            .map(|&k| poses[k].as_ref().unwrap().translation)
            .collect(),
        scale,
    };

    let constraints: Vec<Constraint> = edges
        .iter()
        .filter_map(|edge| {
            let (ps, cs) = (slot_of(edge.parent)?, slot_of(edge.child)?);
            if let Some(rest) = &edge.rest {
                return Some(Constraint {
                    parent: ps,
                    child: cs,
                    kind: rest.joint_type,
                    axis: rest.axis,
                    pivot: rest.pivot,
                });
            }
            let joint = joints.get(edge.child.checked_sub(1)?)?.as_ref()?;
            let (rp, tp) = (&state.rots[ps], &state.trans[ps]);
            Some(Constraint {
                parent: ps,
                child: cs,
                kind: joint.joint_type,
                axis: (rp.inverse() * joint.axis).normalize(),
                pivot: rp.inverse() * (joint.location - tp) / state.scale,
            })
        })
        .collect();

    let problem = Problem {
        data: present.iter().map(|&k| data[k].as_ref().unwrap()).collect(),
        constraints,
        mu: cfg.mu,
    };

    if problem.constraints.is_empty() {
        return (
            poses.to_vec(),
            RefineReport {
                status: RefineStatus::NoConstraints,
                objective_history: Vec::new(),
                constraint_before: 0.0,
                constraint_after: 0.0,
                iterations: 0,
                active_constraints: 0,
            },
        );
    }

    let constraint_before = problem.constraint_energy(&state);
    let mut state = state;
    let mut f = problem.objective(&state);
    let mut history = vec![f];
    let mut lambda = 1e-4;
    let mut status = RefineStatus::NotConverged;
    let mut iterations = 0;

    'outer: for _ in 0..cfg.max_iters {
        let (h, g) = problem.normal_equations(&state);
        let diag = DMatrix::from_diagonal(&h.diagonal().map(|d| d.max(1e-12)));
        let mut accepted = false;
        for _ in 0..16 {
            let damped = &h + &diag * lambda;
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = -chol.solve(&g);
            if step.norm() < cfg.tol {
                status = RefineStatus::Converged;
                break 'outer;
            }
            let candidate = state.retract(&step);
            let fc = problem.objective(&candidate);
            if fc < f {
                state = candidate;
                f = fc;
                history.push(f);
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 5.0;
        }
        iterations += 1;
        if !accepted {
            // no descent direction left at machine precision
            status = RefineStatus::Converged;
            break;
        }
    }

    let constraint_after = problem.constraint_energy(&state);
    let mut out = poses.to_vec();
    for (slot, &k) in present.iter().enumerate() {
        out[k] = Some(Similarity::new(state.rots[slot], state.trans[slot], state.scale));
    }
    (
        out,
        RefineReport {
            status,
            objective_history: history,
            constraint_before,
            constraint_after,
            iterations,
            active_constraints: problem.constraints.len(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{geodesic_angle, rotation_about};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(rng: &mut ChaCha8Rng, center: Vec3, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|_| {
                center
                    + Vec3::new(
                        rng.random_range(-0.05..0.05),
                        rng.random_range(-0.05..0.05),
                        rng.random_range(-0.05..0.05),
                    )
            })
            .collect()
    }

    /// Two-part revolute object: hinge along x through the origin, child
    /// opened by `theta`.
    fn hinge_instance(theta: f64, seed: u64) -> (Vec<Similarity>, JointEstimate, Vec<PartCorrespondence>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cam = Similarity::new(
            rotation_about(&Vec3::new(0.3, 1.0, 0.2), 0.7),
            Vec3::new(0.0, 0.1, 1.2),
            1.1,
        );
        let child_motion = Similarity::new(rotation_about(&Vec3::x(), theta), Vec3::zeros(), 1.0);
        let parent = cam.clone();
        let child = cam.compose(&child_motion);
        let src_p = cloud(&mut rng, Vec3::new(0.0, -0.06, 0.0), 200);
        let src_c = cloud(&mut rng, Vec3::new(0.0, 0.06, 0.0), 200);
        let corr = vec![
            PartCorrespondence {
                dst: src_p.iter().map(|x| parent.apply(x)).collect(),
                src: src_p,
            },
            PartCorrespondence {
                dst: src_c.iter().map(|x| child.apply(x)).collect(),
                src: src_c,
            },
        ];
        let joint = JointEstimate {
            joint_type: JointType::Revolute,
            axis: cam.rotation * Vec3::x(),
            location: cam.apply(&Vec3::zeros()),
            confidence: 1.0,
        };
        (vec![parent, child], joint, corr)
    }

    #[test]
    fn perfect_input_is_a_fixed_point() {
        let (poses, joint, corr) = hinge_instance(0.6, 1);
        let poses: Vec<Option<Similarity>> = poses.into_iter().map(Some).collect();
        let data: Vec<Option<PartCorrespondence>> = corr.into_iter().map(Some).collect();
        let (out, report) = constrained_refine(
            &poses,
            &[None, Some(joint)],
            &[KinematicEdge::bare(1, 2)],
            &data,
            &RefineConfig::default(),
        );
        assert!(report.constraint_before < 1e-20);
        assert_eq!(report.status, RefineStatus::Converged);
        for (a, b) in out.iter().zip(&poses) {
            let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
            assert!((a.rotation.matrix() - b.rotation.matrix()).amax() < 1e-12);
            assert!((a.translation - b.translation).norm() < 1e-12);
            assert!((a.scale - b.scale).abs() < 1e-12);
        }
    }

    #[test]
    fn tilted_child_is_pulled_back_onto_the_hinge() {
        let (truth, joint, corr) = hinge_instance(0.6, 2);
        // child rotated 5° about an axis perpendicular to the hinge
        let tilt = rotation_about(&(truth[0].rotation * Vec3::z()), 5f64.to_radians());
        let mut child = truth[1].clone();
        child.rotation = tilt * child.rotation;
        let poses = vec![Some(truth[0].clone()), Some(child)];
        let data: Vec<Option<PartCorrespondence>> = corr.into_iter().map(Some).collect();
        let (out, report) = constrained_refine(
            &poses,
            &[None, Some(joint.clone())],
            &[KinematicEdge::bare(1, 2)],
            &data,
            &RefineConfig::default(),
        );
        assert!(report.is_monotone());
        assert!(report.constraint_after <= report.constraint_before);
        let (p, c) = (out[0].as_ref().unwrap(), out[1].as_ref().unwrap());
        let rel = c.rotation * p.rotation.inverse();
        let axis = rel.axis().unwrap().into_inner();
        let err = axis.dot(&joint.axis).abs().clamp(0.0, 1.0).acos().to_degrees();
        assert!(err < 0.5, "relative rotation axis off by {err}°");
        assert!(geodesic_angle(c.rotation.matrix(), truth[1].rotation.matrix()) < 1e-6);
    }

    #[test]
    fn monotone_under_noise() {
        let (truth, joint, mut corr) = hinge_instance(1.0, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for c in corr.iter_mut() {
            for y in c.dst.iter_mut() {
                *y += Vec3::new(
                    rng.random_range(-0.004..0.004),
                    rng.random_range(-0.004..0.004),
                    rng.random_range(-0.004..0.004),
                );
            }
        }
        let poses: Vec<Option<Similarity>> = truth
            .iter()
            .map(|t| {
                Some(Similarity::new(
                    rotation_about(&Vec3::new(1.0, -1.0, 0.5), 0.03) * t.rotation,
                    t.translation,
                    t.scale * 1.02,
                ))
            })
            .collect();
        let data: Vec<Option<PartCorrespondence>> = corr.into_iter().map(Some).collect();
        let (_, report) = constrained_refine(
            &poses,
            &[None, Some(joint)],
            &[KinematicEdge::bare(1, 2)],
            &data,
            &RefineConfig::default(),
        );
        assert!(report.objective_history.len() > 1);
        assert!(report.is_monotone());
    }

    #[test]
    fn lone_part_has_no_constraints() {
        let (truth, joint, corr) = hinge_instance(0.3, 4);
        let poses = vec![Some(truth[0].clone()), None];
        let data = vec![Some(corr[0].clone()), None];
        let (out, report) = constrained_refine(
            &poses,
            &[None, Some(joint)],
            &[KinematicEdge::bare(1, 2)],
            &data,
            &RefineConfig::default(),
        );
        assert_eq!(report.status, RefineStatus::NoConstraints);
        assert_eq!(out, poses);
    }

    #[test]
    fn prismatic_and_fixed_penalties_vanish_on_consistent_poses() {
        let r = rotation_about(&Vec3::new(0.1, 0.4, 1.0), 0.8);
        let a = Vec3::new(1.0, 0.0, 0.0);
        let state = State {
            rots: vec![r, r],
            trans: vec![Vec3::new(0.1, 0.2, 0.3), Vec3::new(0.1, 0.2, 0.3) + 0.7 * (r * a)],
            scale: 0.7,
        };
        let mut out = Vec::new();
        constraint_residuals(
            &state,
            &Constraint {
                parent: 0,
                child: 1,
                kind: JointType::Prismatic,
                axis: a,
                pivot: Vec3::zeros(),
            },
            &mut out,
        );
        assert!(out.iter().all(|v| v.abs() < 1e-12));
        out.clear();
        let fixed = State {
            trans: vec![state.trans[0]; 2],
            ..state.clone()
        };
        constraint_residuals(
            &fixed,
            &Constraint {
                parent: 0,
                child: 1,
                kind: JointType::Fixed,
                axis: a,
                pivot: Vec3::zeros(),
            },
            &mut out,
        );
        assert!(out.iter().all(|v| v.abs() < 1e-12));
    }
}
