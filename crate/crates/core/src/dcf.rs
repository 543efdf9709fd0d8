//! Single-cell 802.11 DCF analysis.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AccessMode {
    #[default]
    Basic,
    Rtscts,
}

/// How the mean backoff after `k` collisions relates to the window
/// `W_k = 2^min(k,m) W0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BackoffConvention {
    /// `b_k = W_k / 2`
    #[default]
    WOver2,
    /// `b_k = (W_k - 1) / 2`, the mean of a uniform draw on `0..W_k`.
    WMinus1Over2,
}

/// 802.11 timing and backoff parameters. Times in seconds, sizes in bits,
/// rates in bits per second.
///
/// Defaults are 802.11b DSSS with long preamble: 11 Mbps data, 2 Mbps
/// control frames, 20 us slot, W0 = 32, m = 5, K = 7, 1000-byte payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacParams {
    pub slot_time: f64,
    pub difs: f64,
    pub sifs: f64,
    pub phy_header_time: f64,
    /// MAC header plus FCS, sent at the data rate.
    pub mac_header_bits: f64,
    pub ack_bits: f64,
    pub rts_bits: f64,
    pub cts_bits: f64,
    pub data_rate: f64,
    pub control_rate: f64,
    pub payload_bits: f64,
    pub cw_min: u32,
    pub backoff_doubling_cap: u32,
    pub retry_limit: u32,
    pub access_mode: AccessMode,
    pub backoff_convention: BackoffConvention,
    /// TCP data segment as seen by the MAC (payload plus TCP/IP headers).
    pub tcp_data_bits: f64,
    pub tcp_ack_bits: f64,
}

impl Default for MacParams {
    fn default() -> Self {
        MacParams {
            slot_time: 20e-6,
            difs: 50e-6,
            sifs: 10e-6,
            phy_header_time: 192e-6,
            mac_header_bits: 28.0 * 8.0,
            ack_bits: 14.0 * 8.0,
            rts_bits: 20.0 * 8.0,
            cts_bits: 14.0 * 8.0,
            data_rate: 11e6,
            control_rate: 2e6,
            payload_bits: 1000.0 * 8.0,
            cw_min: 32,
            backoff_doubling_cap: 5,
            retry_limit: 7,
            access_mode: AccessMode::Basic,
            backoff_convention: BackoffConvention::WOver2,
            tcp_data_bits: 1040.0 * 8.0,
            tcp_ack_bits: 40.0 * 8.0,
        }
    }
}

impl MacParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("slot_time", self.slot_time),
            ("data_rate", self.data_rate),
            ("control_rate", self.control_rate),
            ("payload_bits", self.payload_bits),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        let non_negative = [
            ("difs", self.difs),
            ("sifs", self.sifs),
            ("phy_header_time", self.phy_header_time),
            ("mac_header_bits", self.mac_header_bits),
            ("ack_bits", self.ack_bits),
            ("rts_bits", self.rts_bits),
            ("cts_bits", self.cts_bits),
            ("tcp_data_bits", self.tcp_data_bits),
            ("tcp_ack_bits", self.tcp_ack_bits),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ModelError::InvalidParameter(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if self.cw_min < 2 {
            return Err(ModelError::InvalidParameter(format!(
                "cw_min must be at least 2, got {}",
                self.cw_min
            )));
        }
        if self.backoff_doubling_cap > 30 {
            return Err(ModelError::InvalidParameter(
                "backoff_doubling_cap above 30".into(),
            ));
        }
        Ok(())
    }
}

/// Mean backoff `b_k` in slots for `k = 0..=K`.
pub fn mean_backoffs(p: &MacParams) -> Vec<f64> {
    (0..=p.retry_limit)
        .map(|k| {
            let w = (1u64 << k.min(p.backoff_doubling_cap)) as f64 * p.cw_min as f64;
            match p.backoff_convention {
                BackoffConvention::WOver2 => w / 2.0,
                BackoffConvention::WMinus1Over2 => (w - 1.0) / 2.0,
            }
        })
        .collect()
}

/// Attempt probability per backoff slot as a function of the collision
/// probability, `G(γ) = Σ γ^k / Σ γ^k b_k`.
pub fn attempt_prob_g(gamma: f64, p: &MacParams) -> f64 {
    g_of(gamma, &mean_backoffs(p))
}

pub(crate) fn g_of(gamma: f64, b: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut pow = 1.0;
    for &bk in b {
        num += pow;
        den += pow * bk;
        pow *= gamma;
    }
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttemptPoint {
    pub beta: f64,
    pub gamma: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleCellResult {
    pub beta: f64,
    pub gamma: f64,
    pub throughput_pps: f64,
}

pub const DAMPING: f64 = 0.5;
pub const TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 10_000;

/// Solves `β = G(γ)`, `γ = 1 - (1-β)^(n-1)` by damped iteration on β.
pub fn single_cell_fixed_point(n: u32, p: &MacParams) -> Result<AttemptPoint> {
    if n == 0 {
        return Err(ModelError::InvalidParameter("n must be at least 1".into()));
    }
    p.validate()?;
    let b = mean_backoffs(p);
    let closure = |beta: f64| 1.0 - (1.0 - beta).powi(n as i32 - 1);
    let mut beta = g_of(0.0, &b);
    let mut tail = Vec::new();
    for it in 1..=MAX_ITERATIONS {
        let next = (1.0 - DAMPING) * beta + DAMPING * g_of(closure(beta), &b);
        let step = (next - beta).abs();
        beta = next;
        if step < TOLERANCE {
            return Ok(AttemptPoint {
                beta,
                gamma: closure(beta),
                iterations: it,
            });
        }
        if it + 8 > MAX_ITERATIONS {
            tail.push(beta);
        }
    }
    let residual = (beta - g_of(closure(beta), &b)).abs();
    Err(ModelError::NonConvergence {
        iterations: MAX_ITERATIONS,
        residual,
        tail,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameDurations {
    /// Channel time of a successful exchange.
    pub t_s: f64,
    /// Channel time of a collision.
    pub t_c: f64,
}

pub fn frame_durations(p: &MacParams) -> FrameDurations {
    let data = p.phy_header_time + (p.mac_header_bits + p.payload_bits) / p.data_rate;
    let ack = p.phy_header_time + p.ack_bits / p.control_rate;
    match p.access_mode {
        AccessMode::Basic => FrameDurations {
            t_s: data + p.sifs + ack + p.difs,
            t_c: data + p.difs,
        },
        AccessMode::Rtscts => {
            let rts = p.phy_header_time + p.rts_bits / p.control_rate;
            let cts = p.phy_header_time + p.cts_bits / p.control_rate;
            FrameDurations {
                t_s: rts + p.sifs + cts + p.sifs + data + p.sifs + ack + p.difs,
                t_c: rts + p.difs,
            }
        }
    }
}

/// Slotted renewal-reward throughput (packets/s) of `n` saturated nodes
/// attempting with probability `beta` per backoff slot.
pub fn renewal_throughput(n: u32, beta: f64, p: &MacParams) -> f64 {
    let idle = (1.0 - beta).powi(n as i32);
    let p_tr = 1.0 - idle;
    if p_tr <= 0.0 {
        return 0.0;
    }
    let success = n as f64 * beta * (1.0 - beta).powi(n as i32 - 1);
    let d = frame_durations(p);
    success / (idle * p.slot_time + success * d.t_s + (p_tr - success) * d.t_c)
}

/// Aggregate saturation throughput of an isolated cell with `n` nodes.
pub fn single_cell_throughput(n: u32, p: &MacParams) -> Result<f64> {
    let fp = single_cell_fixed_point(n, p)?;
    Ok(renewal_throughput(n, fp.beta, p))
}

pub fn single_cell(n: u32, p: &MacParams) -> Result<SingleCellResult> {
    let fp = single_cell_fixed_point(n, p)?;
    Ok(SingleCellResult {
        beta: fp.beta,
        gamma: fp.gamma,
        throughput_pps: renewal_throughput(n, fp.beta, p),
    })
}

/// A TCP download cell as an equivalent saturated cell: the AP and one STA,
/// both saturated, sending frames of the mean of the data and ACK sizes.
/// The AP throughput is the per-node throughput of that 2-node cell.
pub fn tcp_equivalent_cell(p: &MacParams) -> (u32, MacParams) {
    let mut eff = p.clone();
    eff.payload_bits = (p.tcp_data_bits + p.tcp_ack_bits) / 2.0;
    (2, eff)
}
