#![allow(dead_code)]

use wavefocus_core::{FocusingLab, MediumProfile, SolverGrid};

/// Unit speed on [0, 1.2] with T = 1.
pub fn unit_lab() -> FocusingLab {
    let p = MediumProfile::uniform(1.2, 512).unwrap();
    FocusingLab::new(p, SolverGrid::new(1024, 4096, 2.0, 1.2)).unwrap()
}

/// The reference profile family at T = 1 on a grid small enough for tests.
pub fn reference_lab() -> FocusingLab {
    let p = MediumProfile::reference(1.0);
    let x_max = p.x_max();
    FocusingLab::new(p, SolverGrid::new(2048, 8192, 2.0, x_max)).unwrap()
}
