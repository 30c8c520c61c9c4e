//! Energy and forces of the rotator Hamiltonian on a finite lattice.

use crate::error::Result;
use crate::interaction::Interaction;
use crate::lattice::{Lattice, Neighbor};
use crate::state::SpinState;

/// Total energy: each bond once, virtual spins held at their clamped angle.
pub fn energy(state: &SpinState, lattice: &Lattice, interaction: &Interaction) -> Result<f64> {
    state.check_len(lattice)?;
    let angles = state.angles();
    Ok(energy_of_angles(&angles, lattice, interaction))
}

pub(crate) fn energy_of_angles(angles: &[f64], lattice: &Lattice, interaction: &Interaction) -> f64 {
    let mut total = 0.0;
    for (x, &phi) in angles.iter().enumerate() {
        for (slot, nb) in lattice.neighbors(x).iter().enumerate() {
            match *nb {
                Neighbor::Site(y) if slot % 2 == 0 => {
                    total += interaction.pair_energy(phi - angles[y as usize]);
                }
                Neighbor::Virtual(zeta) => total += interaction.pair_energy(phi - zeta),
                _ => {}
            }
        }
    }
    total
}

/// Energy change from moving site `x` to `new_angle`, using x's bonds only.
pub fn local_energy_delta(
    state: &SpinState,
    lattice: &Lattice,
    interaction: &Interaction,
    x: usize,
    new_angle: f64,
) -> f64 {
    let old = state.angle(x);
    let mut delta = 0.0;
    for nb in lattice.neighbors(x) {
        let other = match *nb {
            // a self-bond stays at zero angle difference
            Neighbor::Site(y) if y as usize == x => continue,
            Neighbor::Site(y) => state.angle(y as usize),
            Neighbor::Virtual(zeta) => zeta,
            Neighbor::Absent => continue,
        };
        delta += interaction.pair_energy(new_angle - other) - interaction.pair_energy(old - other);
    }
    delta
}

/// `∂H/∂φ_x`.
#[inline]
pub fn grad_site(state: &SpinState, lattice: &Lattice, interaction: &Interaction, x: usize) -> f64 {
    match state {
        SpinState::Xy { angles } => grad_of_angles(angles, lattice, interaction, x),
        SpinState::Clock { .. } => {
            let phi = state.angle(x);
            lattice
                .neighbors(x)
                .iter()
                .map(|nb| match *nb {
                    Neighbor::Site(y) => interaction.pair_force(phi - state.angle(y as usize)),
                    Neighbor::Virtual(zeta) => interaction.pair_force(phi - zeta),
                    Neighbor::Absent => 0.0,
                })
                .sum()
        }
    }
}

#[inline]
pub(crate) fn grad_of_angles(angles: &[f64], lattice: &Lattice, interaction: &Interaction, x: usize) -> f64 {
    let phi = angles[x];
    let mut g = 0.0;
    for nb in lattice.neighbors(x) {
        match *nb {
            Neighbor::Site(y) => g += interaction.pair_force(phi - angles[y as usize]),
            Neighbor::Virtual(zeta) => g += interaction.pair_force(phi - zeta),
            Neighbor::Absent => {}
        }
    }
    g
}
