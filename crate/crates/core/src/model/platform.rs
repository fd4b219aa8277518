use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Amount of each FPGA resource class. A per-PE value of zero means the
/// class does not constrain PE count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ResourceVector {
    #[serde(default)]
    pub lut: u64,
    #[serde(default)]
    pub ff: u64,
    #[serde(default)]
    pub bram: u64,
    #[serde(default)]
    pub dsp: u64,
}

impl ResourceVector {
    pub fn classes(&self) -> [(&'static str, u64); 4] {
        [("lut", self.lut), ("ff", self.ff), ("bram", self.bram), ("dsp", self.dsp)]
    }
}

fn default_alpha() -> f64 {
    0.75
}

fn default_slr_count() -> u32 {
    1
}

/// Target FPGA description, loaded from TOML:
///
/// ```toml
/// name = "example"
/// total_mem_banks = 32
/// slr_count = 3
/// bus_width_bits = 512
/// clock_hz = 225e6
/// alpha = 0.75              # optional
/// banks_per_spatial_pe = 2  # optional, defaults to inputs + outputs
///
/// [total_resource]
/// lut = 1303680
/// dsp = 9024
///
/// [resource_per_pe]
/// dsp = 752
///
/// [kernel_resource_per_pe.HOTSPOT]   # optional, per kernel name
/// dsp = 900
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformSpec {
    #[serde(default)]
    pub name: String,
    pub total_mem_banks: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub banks_per_spatial_pe: Option<u32>,
    pub total_resource: ResourceVector,
    pub resource_per_pe: ResourceVector,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_slr_count")]
    pub slr_count: u32,
    pub bus_width_bits: u32,
    pub clock_hz: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub kernel_resource_per_pe: BTreeMap<String, ResourceVector>,
}

impl PlatformSpec {
    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        let spec: PlatformSpec = toml::from_str(text).map_err(|e| ModelError::InvalidPlatform(e.message().to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidPlatform(m));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if self.slr_count < 1 {
            return bad("slr_count must be at least 1".into());
        }
        if self.banks_per_spatial_pe == Some(0) {
            return bad("banks_per_spatial_pe must be at least 1".into());
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return bad(format!("clock_hz must be positive, got {}", self.clock_hz));
        }
        if self.bus_width_bits == 0 {
            return bad("bus_width_bits must be positive".into());
        }
        Ok(())
    }

    /// Cells per bus beat.
    pub fn unroll_factor(&self, cell_bytes: usize) -> usize {
        self.bus_width_bits as usize / 8 / cell_bytes
    }

    /// Banks one spatial PE group occupies: one per input plus one for the
    /// output unless the platform file says otherwise.
    pub fn banks_per_pe(&self, n_inputs: usize) -> u32 {
        self.banks_per_spatial_pe.unwrap_or(n_inputs as u32 + 1)
    }

    /// The platform as seen by one kernel: its own per-PE estimate, if the
    /// file has one, replaces the default.
    pub fn for_kernel(&self, kernel_name: &str) -> Self {
        let mut spec = self.clone();
        if let Some(r) = self.kernel_resource_per_pe.get(kernel_name) {
            spec.resource_per_pe = *r;
        }
        spec.kernel_resource_per_pe.clear();
        spec
    }

    pub fn with_clock(&self, clock_hz: f64) -> Self {
        PlatformSpec { clock_hz, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_defaults_and_errors() {
        let text = "total_mem_banks = 32\nbus_width_bits = 256\nclock_hz = 3e8\n[total_resource]\nlut = 100\n[resource_per_pe]\nlut = 10\n";
        let p = PlatformSpec::from_toml(text).unwrap();
        assert_eq!(p.alpha, 0.75);
        assert_eq!(p.slr_count, 1);
        assert_eq!(p.banks_per_pe(2), 3);
        assert_eq!(p.unroll_factor(4), 8);
        assert!(PlatformSpec::from_toml(&text.replace("clock_hz = 3e8", "clock_hz = 3e8\nalpha = 1.5")).is_err());
        assert!(PlatformSpec::from_toml(&text.replace("clock_hz", "clock_mhz")).is_err());
        let with_kernel = format!("{text}[kernel_resource_per_pe.K]\nlut = 50\n");
        let p = PlatformSpec::from_toml(&with_kernel).unwrap();
        assert_eq!(p.for_kernel("K").resource_per_pe.lut, 50);
        assert_eq!(p.for_kernel("other").resource_per_pe.lut, 10);
    }
}
