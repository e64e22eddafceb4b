//! Occupation-number basis for one momentum sector.
//!
//! Four fermionic modes in the fixed order
//! `(alpha_k, beta_k, alpha_{-k}, beta_{-k})`, indices 0..3. A basis state is
//! a 4-bit mask with bit `i` set iff mode `i` is occupied, i.e.
//! `|m> = (a_0^+)^{n_0} (a_1^+)^{n_1} (a_2^+)^{n_2} (a_3^+)^{n_3} |0>`.
//! A creation operator applied to mask `m` therefore picks up the sign
//! `(-1)^(number of occupied modes below it)`.

/// Hilbert-space dimension of one momentum sector.
pub const DIM: usize = 16;

/// Number of fermionic modes.
pub const MODES: usize = 4;

pub const ALPHA_PLUS: usize = 0;
pub const BETA_PLUS: usize = 1;
pub const ALPHA_MINUS: usize = 2;
pub const BETA_MINUS: usize = 3;

/// Masks with even occupation number, ascending.
pub const EVEN_MASKS: [usize; 8] = [0b0000, 0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100, 0b1111];

/// Odd-occupation masks carrying total momentum +k
/// (`alpha_k`, `beta_k`, and their three-fermion partners).
pub const ODD_PLUS_MASKS: [usize; 4] = [0b0001, 0b0010, 0b0111, 0b1011];

/// Odd-occupation masks carrying total momentum -k.
pub const ODD_MINUS_MASKS: [usize; 4] = [0b0100, 0b1000, 0b1101, 0b1110];

/// Occupation-number parity of a mask (0 = even, 1 = odd).
#[inline]
pub fn occupation_parity(mask: usize) -> usize {
    (mask.count_ones() & 1) as usize
}

#[inline]
fn reorder_sign(mask: usize, mode: usize) -> i32 {
    if (mask & ((1 << mode) - 1)).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `a_mode^+ |mask>`; `None` if the mode is already occupied.
#[inline]
pub fn create(mode: usize, mask: usize) -> Option<(i32, usize)> {
    if mask & (1 << mode) != 0 {
        return None;
    }
    Some((reorder_sign(mask, mode), mask | (1 << mode)))
}

/// `a_mode |mask>`; `None` if the mode is empty.
#[inline]
pub fn annihilate(mode: usize, mask: usize) -> Option<(i32, usize)> {
    if mask & (1 << mode) == 0 {
        return None;
    }
    Some((reorder_sign(mask, mode), mask & !(1 << mode)))
}

/// One factor of an operator string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Create(usize),
    Annihilate(usize),
}

/// Apply an operator string (leftmost factor acts last) to a basis state.
pub fn apply_string(ops: &[Op], mask: usize) -> Option<(i32, usize)> {
    let mut sign = 1;
    let mut m = mask;
    for op in ops.iter().rev() {
        let (s, next) = match *op {
            Op::Create(mode) => create(mode, m)?,
            Op::Annihilate(mode) => annihilate(mode, m)?,
        };
        sign *= s;
        m = next;
    }
    Some((sign, m))
}

/// Basis state produced by a creation string acting on the vacuum,
/// as `(sign, mask)`. Panics if a mode repeats.
pub fn creation_string(modes: &[usize]) -> (i32, usize) {
    apply_string(
        &modes.iter().map(|&m| Op::Create(m)).collect::<Vec<_>>(),
        0,
    )
    .expect("repeated mode in creation string")
}
