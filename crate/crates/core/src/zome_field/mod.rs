//! Zometool geometry: exact golden-field coordinates, the 62 ball slots and
//! the nine standard struts.

mod golden;
mod slots;

pub use golden::{golden_eval, GoldenNumber, GoldenVector, GAMMA};
pub use slots::{
    all_placements, axis_slots, decompositions, displacement_table, placement_for, slot_directions,
    strut_displacement, strut_length, FamilyMismatch, Placement, SlotDirection, SlotFamily, StrutColor,
    StrutSize, StrutSpec,
};
