use serde::{Deserialize, Serialize};

use crate::energy_model::{
    ConvolutionSettings, DeviceParams, HarvestContribution, HarvestModel, Mode, Quantizer,
    VoltageGrid,
};
use crate::error::ModelError;

/// Row-major square matrix of voltage-level transition probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelKernel {
    n: usize,
    data: Vec<f64>,
}

impl LevelKernel {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(ModelError::Dimension("micro matrix must be square".into()));
        }
        Ok(LevelKernel {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n)
    }

    /// Mix every row with the uniform law: `(1 - n eps) A + eps`, making all
    /// entries strictly positive.
    pub fn smoothed(&self, eps: f64) -> Self {
        let n = self.n as f64;
        LevelKernel {
            n: self.n,
            data: self.data.iter().map(|a| (1.0 - n * eps) * a + eps).collect(),
        }
    }

    pub fn max_row_error(&self) -> f64 {
        self.rows()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Voltage kernels for one sleep step, one whole sensing task and one whole
/// transmitting task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroMatrices {
    pub sleep: LevelKernel,
    pub sensing: LevelKernel,
    pub transmitting: Option<LevelKernel>,
}

impl MicroMatrices {
    pub fn build(
        params: &DeviceParams,
        harvest: &HarvestModel,
        grid: &VoltageGrid,
        settings: ConvolutionSettings,
        quantizer: Quantizer,
    ) -> Result<Self, ModelError> {
        let kernel = |mode: Mode, n: usize| -> Result<LevelKernel, ModelError> {
            let c = HarvestContribution::new(params, mode, n, harvest, settings)?;
            LevelKernel::from_rows(
                grid.levels()
                    .iter()
                    .map(|&v| c.level_distribution(v, grid, quantizer))
                    .collect(),
            )
        };
        Ok(MicroMatrices {
            sleep: kernel(Mode::Sleep, 1)?,
            sensing: kernel(Mode::Sensing, params.sensing_duration)?,
            transmitting: params
                .transmit_duration
                .map(|nt| kernel(Mode::Transmitting, nt))
                .transpose()?,
        })
    }

    pub fn smoothed(&self, eps: f64) -> Self {
        MicroMatrices {
            sleep: self.sleep.smoothed(eps),
            sensing: self.sensing.smoothed(eps),
            transmitting: self.transmitting.as_ref().map(|k| k.smoothed(eps)),
        }
    }

    pub fn dim(&self) -> usize {
        self.sleep.dim()
    }
}
