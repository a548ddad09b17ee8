//! Bit set of numerical guard trips recorded per trajectory sample.

use std::fmt;
use std::ops::{BitOr, BitOrAssign};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GuardFlags(u32);

impl GuardFlags {
    pub const NONE: Self = Self(0);
    /// Range fell under `R_MIN`; LOS-rate denominators clamped.
    pub const RANGE_CLAMP: Self = Self(1);
    /// `|cos θ|` at the LOS-elevation guard.
    pub const LOS_ELEVATION: Self = Self(1 << 1);
    /// `|cos θ_U|` at the lead-elevation guard.
    pub const LEAD_ELEVATION: Self = Self(1 << 2);
    /// `cos θ_U cos ψ_U` near zero; the speed channel held its last command.
    pub const SIGMA_SINGULARITY: Self = Self(1 << 3);
    /// `tan θ_U` overflow in the yaw auxiliary; yaw channel held.
    pub const TAN_SINGULARITY: Self = Self(1 << 4);
    /// `1 - (U/U_max)^γ` at the guard; speed channel held.
    pub const SPEED_DENOMINATOR: Self = Self(1 << 5);
    /// `1 - f_z` at the guard; pitch channel held.
    pub const PITCH_DENOMINATOR: Self = Self(1 << 6);
    /// `1 - f_y` at the guard; yaw channel held.
    pub const YAW_DENOMINATOR: Self = Self(1 << 7);
    /// `cos θ_U` at the guard in the yaw command; yaw channel held.
    pub const THETA_U_SINGULARITY: Self = Self(1 << 8);
    /// Target elevation heading at the vertical guard.
    pub const TARGET_VERTICAL: Self = Self(1 << 9);
    /// An RK4 stage evaluated an actuator state outside its open bound.
    pub const ACTUATOR_OVERSHOOT: Self = Self(1 << 10);
    /// A command was limited to `±command_limit`.
    pub const COMMAND_LIMIT: Self = Self(1 << 11);

    const NAMES: [(GuardFlags, &'static str); 12] = [
        (Self::RANGE_CLAMP, "range_clamp"),
        (Self::LOS_ELEVATION, "los_elevation"),
        (Self::LEAD_ELEVATION, "lead_elevation"),
        (Self::SIGMA_SINGULARITY, "sigma_singularity"),
        (Self::TAN_SINGULARITY, "tan_singularity"),
        (Self::SPEED_DENOMINATOR, "speed_denominator"),
        (Self::PITCH_DENOMINATOR, "pitch_denominator"),
        (Self::YAW_DENOMINATOR, "yaw_denominator"),
        (Self::THETA_U_SINGULARITY, "theta_u_singularity"),
        (Self::TARGET_VERTICAL, "target_vertical"),
        (Self::ACTUATOR_OVERSHOOT, "actuator_overshoot"),
        (Self::COMMAND_LIMIT, "command_limit"),
    ];

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn from_bits(bits: u32) -> Self {
        Self(bits)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, other: Self) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn set_if(&mut self, cond: bool, flag: Self) {
        if cond {
            self.0 |= flag.0;
        }
    }

    /// Flags that mean a guidance channel fell back to its held command.
    pub fn held_command(self) -> bool {
        const HELD: u32 = GuardFlags::SIGMA_SINGULARITY.0
            | GuardFlags::TAN_SINGULARITY.0
            | GuardFlags::SPEED_DENOMINATOR.0
            | GuardFlags::PITCH_DENOMINATOR.0
            | GuardFlags::YAW_DENOMINATOR.0
            | GuardFlags::THETA_U_SINGULARITY.0;
        self.0 & HELD != 0
    }
}

impl BitOr for GuardFlags {
    type Output = Self;
    fn bitor(self, rhs: Self) -> Self {
        Self(self.0 | rhs.0)
    }
}

impl BitOrAssign for GuardFlags {
    fn bitor_assign(&mut self, rhs: Self) {
        self.0 |= rhs.0;
    }
}

impl fmt::Display for GuardFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("none");
        }
        let mut first = true;
        for (flag, name) in Self::NAMES {
            if self.contains(flag) {
                if !first {
                    f.write_str("|")?;
                }
                f.write_str(name)?;
                first = false;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_lists_names() {
        let f = GuardFlags::RANGE_CLAMP | GuardFlags::YAW_DENOMINATOR;
        assert_eq!(f.to_string(), "range_clamp|yaw_denominator");
        assert_eq!(GuardFlags::NONE.to_string(), "none");
        assert!(f.held_command());
        assert!(!GuardFlags::RANGE_CLAMP.held_command());
    }
}
