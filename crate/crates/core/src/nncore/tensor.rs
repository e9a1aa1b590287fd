use crate::error::{Error, Result};

/// Dense row-major float-64 array with an optional gradient slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape(
                "tensor",
                format!("shape {shape:?} needs {n} elements, got {}", data.len()),
            ));
        }
        Ok(Tensor {
            shape,
            data,
            grad: None,
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
            grad: None,
        }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            shape: vec![],
            data: vec![v],
            grad: None,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("tensor", "ragged rows"));
        }
        Tensor::new(vec![rows.len(), cols], rows.concat())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Single value of a one-element tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    /// Adds `g` into the gradient slot, creating it when absent.
    pub fn accumulate_grad(&mut self, g: &[f64]) {
        debug_assert_eq!(g.len(), self.data.len());
        match &mut self.grad {
            Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
            None => self.grad = Some(g.to_vec()),
        }
    }

    pub fn clear_grad(&mut self) {
        self.grad = None;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub(crate) fn dims2(&self, op: &'static str) -> Result<(usize, usize)> {
        match self.shape[..] {
            [a, b] => Ok((a, b)),
            _ => Err(Error::shape(
                op,
                format!("expected a matrix, got shape {:?}", self.shape),
            )),
        }
    }

    pub(crate) fn dims3(&self, op: &'static str) -> Result<(usize, usize, usize)> {
        match self.shape[..] {
            [a, b, c] => Ok((a, b, c)),
            _ => Err(Error::shape(
                op,
                format!("expected rank 3, got shape {:?}", self.shape),
            )),
        }
    }
}

/// `[rows, cols]` of 0/1 flags; 1 marks a real token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl Mask {
    pub fn new(rows: usize, cols: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(Error::shape(
                "mask",
                format!("{rows}x{cols} mask from {} flags", bits.len()),
            ));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("mask flags must be 0 or 1".into()));
        }
        Ok(Mask { rows, cols, bits })
    }

    pub(crate) fn from_bits(rows: usize, cols: usize, bits: Vec<u8>) -> Self {
        debug_assert_eq!(bits.len(), rows * cols);
        Mask { rows, cols, bits }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Mask {
            rows,
            cols,
            bits: vec![1; rows * cols],
        }
    }

    /// Row `i` has its first `lengths[i]` positions set.
    pub fn from_lengths(lengths: &[usize], cols: usize) -> Self {
        let mut bits = vec![0; lengths.len() * cols];
        for (r, &n) in lengths.iter().enumerate() {
            bits[r * cols..r * cols + n.min(cols)].fill(1);
        }
        Mask {
            rows: lengths.len(),
            cols,
            bits,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_set(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col] == 1
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.bits[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_count(&self, row: usize) -> usize {
        self.row(row).iter().filter(|&&b| b == 1).count()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Copy extended with `extra` masked-out columns.
    pub fn padded(&self, extra: usize) -> Mask {
        let cols = self.cols + extra;
        let mut bits = vec![0; self.rows * cols];
        for r in 0..self.rows {
            bits[r * cols..r * cols + self.cols].copy_from_slice(self.row(r));
        }
        Mask {
            rows: self.rows,
            cols,
            bits,
        }
    }

    pub(crate) fn check_shape(&self, op: &'static str, rows: usize, cols: usize) -> Result<()> {
        if self.rows != rows || self.cols != cols {
            return Err(Error::shape(
                op,
                format!(
                    "mask is {}x{}, input is {rows}x{cols}",
                    self.rows, self.cols
                ),
            ));
        }
        Ok(())
    }

    /// Shape check plus at least one real position per row.
    pub(crate) fn check_nonempty(&self, op: &'static str, rows: usize, cols: usize) -> Result<()> {
        self.check_shape(op, rows, cols)?;
        if let Some(r) = (0..rows).find(|&r| self.row_count(r) == 0) {
            return Err(Error::InvalidArgument(format!(
                "{op}: mask row {r} has no real positions"
            )));
        }
        Ok(())
    }
}
