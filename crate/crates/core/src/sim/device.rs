use serde::{Deserialize, Serialize};

use crate::protocol::{ActuatorKind, HapticChannel, HapticCommandFrame};

/// Actuator emulator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceModel {
    /// Seconds; pressure approaches its setpoint exponentially.
    pub inflation_time_constant: f64,
    /// Force of a fully inflated airbag, N.
    pub max_force: f64,
    pub vibro_latency_ms: u32,
    /// Airbag footprint, metadata only.
    pub airbag_width_cm: f64,
    pub airbag_length_cm: f64,
}

impl Default for DeviceModel {
    fn default() -> Self {
        Self {
            inflation_time_constant: 1.5,
            max_force: 10.0,
            vibro_latency_ms: 10,
            airbag_width_cm: 7.0,
            airbag_length_cm: 8.0,
        }
    }
}

impl DeviceModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.inflation_time_constant > 0.0 && self.max_force > 0.0) {
            return Err("device time constant and force must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct DeviceState {
    /// Fraction of full pressure per channel.
    pressure: [f64; 4],
    setpoint: [f64; 4],
    /// Active vibration window per channel, ms.
    vibro: [Option<(u64, u64)>; 4],
}

impl DeviceState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn receive(&mut self, model: &DeviceModel, now_ms: u32, cmd: &HapticCommandFrame) {
        let i = cmd.channel.index();
        match cmd.actuator {
            ActuatorKind::PumpInflate => self.setpoint[i] = f64::from(cmd.intensity) / 255.0,
            ActuatorKind::PumpDeflate => self.setpoint[i] = 0.0,
            ActuatorKind::Vibro => {
                let start = u64::from(now_ms) + u64::from(model.vibro_latency_ms);
                self.vibro[i] = Some((start, start + u64::from(cmd.duration_ms)));
            }
        }
    }

    pub fn advance(&mut self, model: &DeviceModel, dt_ms: u32) {
        let k = 1.0 - (-(f64::from(dt_ms) / 1000.0) / model.inflation_time_constant).exp();
        for (p, s) in self.pressure.iter_mut().zip(self.setpoint) {
            *p += (s - *p) * k;
        }
    }

    pub fn force(&self, model: &DeviceModel, channel: HapticChannel) -> f64 {
        self.pressure[channel.index()] * model.max_force
    }

    pub fn vibrating(&self, channel: HapticChannel, now_ms: u32) -> bool {
        let now = u64::from(now_ms);
        self.vibro[channel.index()].is_some_and(|(a, b)| now >= a && now < b)
    }

    pub fn any_vibrating(&self, now_ms: u32) -> bool {
        HapticChannel::ALL.iter().any(|&c| self.vibrating(c, now_ms))
    }
}
