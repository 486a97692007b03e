use nalgebra::DMatrix;

/// A collection of named parameter tensors with a fixed traversal order.
///
/// Optimizers, gradient accumulation and checkpointing all walk the tensors
/// in the order given by [`ParamTensors::named`].
pub trait ParamTensors: Clone + Send + Sync {
    fn named(&self) -> Vec<(String, &DMatrix<f64>)>;
    fn tensors_mut(&mut self) -> Vec<&mut DMatrix<f64>>;

    fn tensors(&self) -> Vec<&DMatrix<f64>> {
        self.named().into_iter().map(|(_, t)| t).collect()
    }

    fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for t in out.tensors_mut() {
            t.fill(0.0);
        }
        out
    }

    /// `self += scale * other`.
    fn add_scaled(&mut self, other: &Self, scale: f64) {
        let src = other.tensors();
        for (dst, s) in self.tensors_mut().into_iter().zip(src) {
            *dst += s * scale;
        }
    }

    fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            *t *= factor;
        }
    }

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Flattened copy of every entry, tensor by tensor in column-major order.
    fn flatten(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.iter().copied()).collect()
    }

    /// Inverse of [`ParamTensors::flatten`]. Panics if the length differs.
    fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length mismatch");
        let mut offset = 0;
        for t in self.tensors_mut() {
            let len = t.len();
            t.as_mut_slice().copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
    }
}
