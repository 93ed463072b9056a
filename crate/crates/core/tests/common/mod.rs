#![allow(dead_code)]

pub mod cases;
pub mod oracle;

use mgg::params::{Binding, ParamStore};
use mgg::seqgrad::{Graph, Var};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-3;
/// Retry step for entries whose first difference straddles a ReLU or max kink.
pub const FINE_STEP: f64 = 1e-6;
pub const REL_TOL: f64 = 1e-4;
pub const ABS_FLOOR: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random(rng: &mut ChaCha8Rng, shape: (usize, usize), scale: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || rng.random_range(-scale..scale))
}

#[derive(Debug, Default)]
pub struct GradCheck {
    pub checked: usize,
    pub retried: usize,
    pub worst_rel: f64,
    pub failures: Vec<String>,
}

impl GradCheck {
    pub fn assert_ok(&self) {
        assert!(self.checked > 0, "nothing was checked");
        assert!(
            self.failures.is_empty(),
            "{} of {} entries off (worst relative error {:.3e}):\n{}",
            self.failures.len(),
            self.checked,
            self.worst_rel,
            self.failures.iter().take(10).cloned().collect::<Vec<_>>().join("\n")
        );
    }
}

/// Compares backward-pass gradients of `loss` with central differences for
/// every entry of every tensor in `store`. An entry passes when
/// `|analytic - numeric| <= rel_tol * max(|analytic|, |numeric|) + ABS_FLOOR`.
pub fn gradcheck_with<L>(store: &ParamStore<f64>, rel_tol: f64, loss: L) -> GradCheck
where
    L: Fn(&mut Graph<f64>, &mut Binding<'_, f64>) -> Var,
{
    let mut graph = Graph::new();
    let mut binding = Binding::new(store);
    let out = loss(&mut graph, &mut binding);
    graph.backward(out).unwrap();
    let analytic = binding.gradients(&graph);

    let eval = |s: &ParamStore<f64>| {
        let mut g = Graph::new();
        let mut b = Binding::frozen(s);
        let v = loss(&mut g, &mut b);
        g.scalar(v)
    };
    let mut work = store.clone();
    let mut report = GradCheck::default();
    let names: Vec<String> = store.names().map(str::to_string).collect();
    for name in names {
        let Some(grad) = analytic.get(&name) else { continue };
        let len = work.get(&name).unwrap().len();
        for k in 0..len {
            let orig = work.get(&name).unwrap().as_slice().unwrap()[k];
            let mut central = |h: f64| {
                work.get_mut(&name).unwrap().as_slice_mut().unwrap()[k] = orig + h;
                let plus = eval(&work);
                work.get_mut(&name).unwrap().as_slice_mut().unwrap()[k] = orig - h;
                let minus = eval(&work);
                work.get_mut(&name).unwrap().as_slice_mut().unwrap()[k] = orig;
                (plus - minus) / (2.0 * h)
            };
            let a = grad.as_slice().unwrap()[k];
            let within = |n: f64| (a - n).abs() <= rel_tol * a.abs().max(n.abs()) + ABS_FLOOR;
            let mut numeric = central(FD_STEP);
            if !within(numeric) {
                numeric = central(FINE_STEP);
                report.retried += 1;
            }
            let diff = (a - numeric).abs();
            let scale = a.abs().max(numeric.abs());
            if scale > ABS_FLOOR {
                report.worst_rel = report.worst_rel.max(diff / scale);
            }
            if diff > rel_tol * scale + ABS_FLOOR {
                report.failures.push(format!("{name}[{k}]: analytic {a:.9e}, numeric {numeric:.9e}"));
            }
            report.checked += 1;
        }
    }
    report
}

pub fn gradcheck<L>(store: &ParamStore<f64>, loss: L) -> GradCheck
where
    L: Fn(&mut Graph<f64>, &mut Binding<'_, f64>) -> Var,
{
    gradcheck_with(store, REL_TOL, loss)
}

/// A fixed random weighting so a tensor-valued output becomes a scalar with
/// generic gradients.
pub fn project(graph: &mut Graph<f64>, v: Var, seed: u64) -> Var {
    let dim = graph.value(v).dim();
    let mut r = rng(seed);
    let w = graph.input(random(&mut r, dim, 1.0)).unwrap();
    let p = graph.mul(v, w).unwrap();
    graph.sum(p).unwrap()
}
