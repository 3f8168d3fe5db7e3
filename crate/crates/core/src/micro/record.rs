use std::io::Write;

use crate::error::Result;

/// Observables of one simulation at one lattice time.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// `‖X_N(t) − X∞‖₂`.
    pub dist_to_xinf: Option<f64>,
    /// `‖X_N(t) − X_t‖₂`.
    pub dist_to_xt: Option<f64>,
    /// `‖λ_N(t) − ℓ‖₂`.
    pub dist_to_ell: Option<f64>,
    pub mean_intensity: f64,
    pub mean_current: f64,
    pub total_spikes: u64,
    pub max_current: f64,
    /// `‖M_N(t)‖₂²`.
    pub martingale_sq: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub samples: Vec<Sample>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TrajectoryRecord {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    /// Samples with `t` in `[from, to]`.
    pub fn window(&self, from: f64, to: f64) -> impl Iterator<Item = &Sample> + '_ {
        self.samples.iter().filter(move |s| s.t >= from && s.t <= to)
    }

    /// Writes `t,dist_to_xinf,dist_to_xt,mean_intensity,total_spikes,max_current`;
    /// absent distances are left empty.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "dist_to_xinf", "dist_to_xt", "mean_intensity", "total_spikes", "max_current"])?;
        for s in &self.samples {
            wtr.write_record([
                s.t.to_string(),
                opt(s.dist_to_xinf),
                opt(s.dist_to_xt),
                s.mean_intensity.to_string(),
                s.total_spikes.to_string(),
                s.max_current.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Writes `t,l2sq_mn` for samples carrying the martingale norm.
    pub fn write_martingale_csv(&self, out: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "l2sq_mn"])?;
        for s in &self.samples {
            if let Some(m) = s.martingale_sq {
                wtr.write_record([s.t.to_string(), m.to_string()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Writes a spike log as `t,neuron`.
pub fn write_spike_log(spikes: &[(f64, u32)], out: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["t", "neuron"])?;
    for (t, i) in spikes {
        wtr.write_record([t.to_string(), i.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}
