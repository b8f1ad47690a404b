use crate::scalar::Scalar;

/// Anything holding trainable buffers with matching gradient buffers.
pub trait Trainable<T: Scalar> {
    /// Visits `(values, gradients)` buffer pairs, always in the same order.
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T]));

    fn zero_grad(&mut self) {
        self.visit_params(&mut |_, g| g.fill(T::zero()));
    }

    fn num_params(&mut self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |p, _| n += p.len());
        n
    }
}

/// Activation applied after neighborhood aggregation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Identity,
    LeakyRelu { slope: f64 },
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Identity => x,
            Activation::LeakyRelu { slope } => crate::tensor::leaky_relu_scalar(x, T::lit(slope)),
        }
    }

    /// Derivative at the pre-activation value `x`.
    #[inline]
    pub fn derivative<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Identity => T::one(),
            Activation::LeakyRelu { slope } => crate::tensor::leaky_relu_derivative(x, T::lit(slope)),
        }
    }

    pub(crate) fn forward<T: Scalar>(self, pre: &crate::tensor::Matrix<T>) -> crate::tensor::Matrix<T> {
        pre.map(|x| self.apply(x))
    }

    /// Upstream gradient multiplied by the activation derivative.
    pub(crate) fn backward<T: Scalar>(
        self,
        pre: &crate::tensor::Matrix<T>,
        upstream: &crate::tensor::Matrix<T>,
    ) -> crate::tensor::Matrix<T> {
        let mut out = upstream.clone();
        for (g, &x) in out.as_mut_slice().iter_mut().zip(pre.as_slice()) {
            *g *= self.derivative(x);
        }
        out
    }
}

/// Uniform Glorot bound `sqrt(6 / (fan_in + fan_out))`.
pub(crate) fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

pub(crate) fn uniform_fill<T: Scalar, R: rand::Rng>(buf: &mut [T], bound: f64, rng: &mut R) {
    for x in buf.iter_mut() {
        *x = T::lit(rng.random_range(-bound..=bound));
    }
}
