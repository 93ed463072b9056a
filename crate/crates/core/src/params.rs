//! Named parameter storage and the glue that binds it into a [`Graph`].

use indexmap::IndexMap;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{MggError, Result};
use crate::seqgrad::{ConvSpec, Graph, Real, Var};

/// Per-parameter gradients keyed by canonical parameter name.
pub type Gradients<F> = IndexMap<String, Array2<F>>;

/// Learnable matrices keyed by canonical names, in registration order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStore<F> {
    entries: IndexMap<String, Array2<F>>,
}

impl<F: Real> Default for ParamStore<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Real> ParamStore<F> {
    pub fn new() -> Self {
        ParamStore { entries: IndexMap::new() }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Array2<F>) -> Result<()> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(MggError::Invalid(format!("parameter {name} registered twice")));
        }
        self.entries.insert(name, value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Array2<F>> {
        self.entries.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Array2<F>> {
        self.entries.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Array2<F>)> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Array2<F>)> {
        self.entries.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Number of named tensors.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalars.
    pub fn scalar_count(&self) -> usize {
        self.entries.values().map(|a| a.len()).sum()
    }

    pub fn scalar_count_with_prefix(&self, prefix: &str) -> usize {
        self.entries.iter().filter(|(k, _)| k.starts_with(prefix)).map(|(_, a)| a.len()).sum()
    }

    pub fn cast<G: Real>(&self) -> ParamStore<G> {
        ParamStore {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), v.mapv(|x| G::from_f64(x.as_f64()))))
                .collect(),
        }
    }
}

/// Lazily copies parameters into a graph, one leaf per name.
pub struct Binding<'a, F> {
    store: &'a ParamStore<F>,
    trainable: bool,
    vars: IndexMap<String, Var>,
}

impl<'a, F: Real> Binding<'a, F> {
    /// Parameters become learnable leaves.
    pub fn new(store: &'a ParamStore<F>) -> Self {
        Binding { store, trainable: true, vars: IndexMap::new() }
    }

    /// Parameters become constants; backward never touches them.
    pub fn frozen(store: &'a ParamStore<F>) -> Self {
        Binding { store, trainable: false, vars: IndexMap::new() }
    }

    pub fn var(&mut self, graph: &mut Graph<F>, name: &str) -> Result<Var> {
        if let Some(v) = self.vars.get(name) {
            return Ok(*v);
        }
        let value = self
            .store
            .get(name)
            .ok_or_else(|| MggError::Invalid(format!("unknown parameter {name}")))?;
        let v = graph.leaf(value.clone(), self.trainable)?;
        self.vars.insert(name.to_string(), v);
        Ok(v)
    }

    /// Gradients of every bound parameter after `graph.backward`. Bound
    /// parameters the loss does not depend on get zero gradients.
    pub fn gradients(&self, graph: &Graph<F>) -> Gradients<F> {
        self.vars
            .iter()
            .map(|(name, v)| {
                let g = graph.grad(*v).cloned().unwrap_or_else(|| Array2::zeros(graph.value(*v).dim()));
                (name.clone(), g)
            })
            .collect()
    }
}

/// Seeded initialiser: conv weights uniform in `+-sqrt(6 / fan_in)`, biases zero.
pub struct ParamInit {
    rng: ChaCha8Rng,
}

impl ParamInit {
    pub fn new(seed: u64) -> Self {
        ParamInit { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn uniform<F: Real>(&mut self, shape: (usize, usize), bound: f64) -> Array2<F> {
        Array2::from_shape_simple_fn(shape, || F::from_f64(self.rng.random_range(-bound..=bound)))
    }

    pub fn fan_in_uniform<F: Real>(&mut self, shape: (usize, usize), fan_in: usize) -> Array2<F> {
        self.uniform(shape, (6.0 / fan_in as f64).sqrt())
    }
}

/// A temporal (de)convolution with its canonical parameter names
/// `<name>.weight` and `<name>.bias`.
#[derive(Clone, Debug)]
pub struct ConvLayer {
    pub name: String,
    pub spec: ConvSpec,
    pub in_channels: usize,
    pub transposed: bool,
}

impl ConvLayer {
    pub fn conv(name: impl Into<String>, in_channels: usize, spec: ConvSpec) -> Self {
        ConvLayer { name: name.into(), spec, in_channels, transposed: false }
    }

    pub fn deconv(name: impl Into<String>, in_channels: usize, spec: ConvSpec) -> Self {
        ConvLayer { name: name.into(), spec, in_channels, transposed: true }
    }

    pub fn weight_name(&self) -> String {
        format!("{}.weight", self.name)
    }

    pub fn bias_name(&self) -> String {
        format!("{}.bias", self.name)
    }

    pub fn weight_shape(&self) -> (usize, usize) {
        if self.transposed {
            (self.in_channels, self.spec.kernel * self.spec.filters)
        } else {
            self.spec.weight_shape(self.in_channels)
        }
    }

    pub fn register<F: Real>(&self, store: &mut ParamStore<F>, init: &mut ParamInit) -> Result<()> {
        self.spec.validate()?;
        // A transposed conv scatters each input over `kernel / stride` taps per output.
        let fan_in = if self.transposed {
            (self.in_channels * self.spec.kernel).div_ceil(self.spec.stride)
        } else {
            self.in_channels * self.spec.kernel
        };
        store.insert(self.weight_name(), init.fan_in_uniform(self.weight_shape(), fan_in))?;
        store.insert(self.bias_name(), Array2::zeros((1, self.spec.filters)))
    }

    pub fn forward<F: Real>(&self, graph: &mut Graph<F>, binding: &mut Binding<'_, F>, x: Var) -> Result<Var> {
        let w = binding.var(graph, &self.weight_name())?;
        let b = binding.var(graph, &self.bias_name())?;
        if self.transposed {
            graph.deconv1d(x, &self.spec, w, b)
        } else {
            graph.conv1d(x, &self.spec, w, b)
        }
    }
}
