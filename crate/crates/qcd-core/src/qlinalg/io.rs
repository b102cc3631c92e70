//! JSON serialization of matrices and channels.
//!
//! Matrices are stored as `{"dims": [...], "re": [[...]], "im": [[...]]}` with
//! row-major entries; `dims` lists the tensor-factor dimensions (their product
//! is the matrix side length). Channels are stored as either a Kraus list or a
//! Choi matrix plus the input/output dimensions.

use super::{Channel, ComplexMatrix, HermitianOperator, PositiveOperator};
use crate::error::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// On-disk form of a complex matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    /// Tensor-factor dimensions; the product is the matrix side length.
    pub dims: Vec<usize>,
    /// Real parts, row-major.
    pub re: Vec<Vec<f64>>,
    /// Imaginary parts, row-major.
    pub im: Vec<Vec<f64>>,
}

/// Serializes a square matrix with the given tensor-factor dimensions.
pub fn matrix_to_json(m: &ComplexMatrix, dims: &[usize]) -> Result<MatrixJson> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.dim() != total {
        return Err(Error::DimMismatch(format!(
            "matrix side {} does not match dims product {}",
            m.rows(),
            total
        )));
    }
    let d = m.dim();
    let mut re = vec![vec![0.0; d]; d];
    let mut im = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            re[i][j] = m.at(i, j).re;
            im[i][j] = m.at(i, j).im;
        }
    }
    Ok(MatrixJson { dims: dims.to_vec(), re, im })
}

/// Deserializes a matrix, validating shape consistency.
pub fn matrix_from_json(j: &MatrixJson) -> Result<ComplexMatrix> {
    let total: usize = j.dims.iter().product();
    if total == 0 {
        return Err(Error::InvalidArgument("empty dims in matrix JSON".into()));
    }
    if j.re.len() != total || j.im.len() != total {
        return Err(Error::DimMismatch("row count does not match dims".into()));
    }
    let mut data = Array2::<Complex64>::zeros((total, total));
    for i in 0..total {
        if j.re[i].len() != total || j.im[i].len() != total {
            return Err(Error::DimMismatch("column count does not match dims".into()));
        }
        for k in 0..total {
            data[(i, k)] = Complex64::new(j.re[i][k], j.im[i][k]);
        }
    }
    ComplexMatrix::new(data)
}

/// On-disk form of a channel: Kraus list and/or Choi matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelJson {
    pub dim_in: usize,
    pub dim_out: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<KrausJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choi: Option<MatrixJson>,
}

/// On-disk form of one (possibly rectangular) Kraus operator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KrausJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Serializes a channel (Choi form; authoritative and compact).
pub fn channel_to_json(ch: &Channel) -> Result<ChannelJson> {
    Ok(ChannelJson {
        dim_in: ch.dim_in(),
        dim_out: ch.dim_out(),
        kraus: None,
        choi: Some(matrix_to_json(ch.choi().matrix(), &[ch.dim_in(), ch.dim_out()])?),
    })
}

/// Deserializes a channel from Kraus or Choi data (Kraus wins if both given).
pub fn channel_from_json(j: &ChannelJson) -> Result<Channel> {
    if let Some(kraus) = &j.kraus {
        let ops: Vec<ComplexMatrix> = kraus
            .iter()
            .map(|k| {
                let rows: Vec<Vec<Complex64>> = k
                    .re
                    .iter()
                    .zip(k.im.iter())
                    .map(|(rr, ir)| {
                        rr.iter()
                            .zip(ir.iter())
                            .map(|(&a, &b)| Complex64::new(a, b))
                            .collect()
                    })
                    .collect();
                ComplexMatrix::from_rows(rows)
            })
            .collect::<Result<_>>()?;
        for op in &ops {
            if op.rows() != j.dim_out || op.cols() != j.dim_in {
                return Err(Error::DimMismatch("Kraus shape does not match channel dims".into()));
            }
        }
        return Channel::from_kraus(ops);
    }
    if let Some(choi) = &j.choi {
        let m = matrix_from_json(choi)?;
        let pos = PositiveOperator::try_new(HermitianOperator::try_new(m)?)?;
        return Channel::from_choi(pos, j.dim_in, j.dim_out);
    }
    Err(Error::InvalidArgument("channel JSON needs kraus or choi".into()))
}
