//! Process-wide fault injection used by the negative-control build.
//!
//! When enabled, every 4D Hodge star (invariant and flat engines) carries an
//! extra factor of −1.

use std::sync::atomic::{AtomicBool, Ordering};

static HODGE_FLIP: AtomicBool = AtomicBool::new(false);

pub fn set_hodge_flip(on: bool) {
    HODGE_FLIP.store(on, Ordering::SeqCst);
}

pub fn hodge_flip() -> bool {
    HODGE_FLIP.load(Ordering::SeqCst)
}

pub(crate) fn hodge_sign() -> i32 {
    if hodge_flip() {
        -1
    } else {
        1
    }
}
