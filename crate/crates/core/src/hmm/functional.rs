use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Term `h_s(x_s, x_{s+1})`, receiving the time index `s`.
pub type TermFn<S> = Arc<dyn Fn(usize, &S, &S) -> f64 + Send + Sync>;
/// Function of the final state only.
pub type MarginalFn<S> = Arc<dyn Fn(&S) -> f64 + Send + Sync>;

/// Additive state functional `S_t(x_{0:t}) = Σ_{s<t} h_s(x_s, x_{s+1})`,
/// optionally completed by a marginal term `m(x_t)` at the final time.
///
/// The marginal term lets statistics such as `Σ_{s=0}^t x_s²` be written
/// with `h_s = x_s²` and `m = x_t²`: smoothers carry the pairwise sum and
/// add `m` through the filter at estimation time.
#[derive(Clone)]
pub struct AdditiveFunctional<S> {
    name: String,
    term: TermFn<S>,
    marginal: Option<MarginalFn<S>>,
    horizon: Option<usize>,
}

impl<S> fmt::Debug for AdditiveFunctional<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdditiveFunctional")
            .field("name", &self.name)
            .field("marginal", &self.marginal.is_some())
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl<S> AdditiveFunctional<S> {
    /// A functional whose term may depend on the time index.
    pub fn new<F>(name: impl Into<String>, term: F) -> Self
    where
        F: Fn(usize, &S, &S) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            term: Arc::new(term),
            marginal: None,
            horizon: None,
        }
    }

    /// Same term function at every time step.
    pub fn homogeneous<F>(name: impl Into<String>, term: F) -> Self
    where
        F: Fn(&S, &S) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, move |_, x, x_next| term(x, x_next))
    }

    /// An explicit, finite list of terms `h_0, ..., h_{T-1}`.
    pub fn from_terms(name: impl Into<String>, terms: Vec<TermFn<S>>) -> Self
    where
        S: 'static,
    {
        let horizon = terms.len();
        let mut f = Self::new(name, move |s, x, x_next| terms[s](s, x, x_next));
        f.horizon = Some(horizon);
        f
    }

    pub fn with_marginal<F>(mut self, marginal: F) -> Self
    where
        F: Fn(&S) -> f64 + Send + Sync + 'static,
    {
        self.marginal = Some(Arc::new(marginal));
        self
    }

    /// Restricts the functional to `horizon` terms.
    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }

    #[inline]
    pub fn term(&self, s: usize, x: &S, x_next: &S) -> f64 {
        (self.term)(s, x, x_next)
    }

    pub fn marginal(&self) -> Option<&MarginalFn<S>> {
        self.marginal.as_ref()
    }

    pub fn marginal_value(&self, x: &S) -> f64 {
        self.marginal.as_ref().map_or(0.0, |m| m(x))
    }

    /// Pairwise sum `Σ_{ℓ<t} h_ℓ(x_ℓ, x_{ℓ+1})` over a path `x_{0:t}`.
    pub fn evaluate(&self, path: &[S]) -> Result<f64> {
        self.evaluate_from(0, path)
    }

    /// Pairwise sum over a path segment starting at absolute time `start`.
    pub fn evaluate_from(&self, start: usize, path: &[S]) -> Result<f64> {
        let needed = start + path.len().saturating_sub(1);
        if let Some(available) = self.horizon {
            if needed > available {
                return Err(Error::HorizonMismatch {
                    path_len: path.len(),
                    needed,
                    available,
                });
            }
        }
        Ok(path
            .windows(2)
            .enumerate()
            .map(|(l, w)| self.term(start + l, &w[0], &w[1]))
            .sum())
    }

    /// Full statistic: pairwise sum plus the marginal term at the last state.
    pub fn evaluate_statistic(&self, path: &[S]) -> Result<f64> {
        let last = path.last().map_or(0.0, |x| self.marginal_value(x));
        Ok(self.evaluate(path)? + last)
    }
}

/// Smoothing targets used in the experiments, on scalar states.
pub mod statistics {
    use super::AdditiveFunctional;

    /// `Σ_{s=0}^t x_s`
    pub fn sum_x() -> AdditiveFunctional<f64> {
        AdditiveFunctional::homogeneous("sum_x", |x: &f64, _: &f64| *x).with_marginal(|x| *x)
    }

    /// `Σ_{s=0}^t x_s²`
    pub fn sum_x2() -> AdditiveFunctional<f64> {
        AdditiveFunctional::homogeneous("sum_x2", |x: &f64, _: &f64| x * x).with_marginal(|x| x * x)
    }

    /// `Σ_{s=0}^{t-1} x_s x_{s+1}`
    pub fn sum_lag1() -> AdditiveFunctional<f64> {
        AdditiveFunctional::homogeneous("sum_lag1", |x: &f64, y: &f64| x * y)
    }
}
