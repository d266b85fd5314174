//! 5x7 bitmap digits and the house-number plate layout built from them.

const GLYPHS: [[u8; 7]; 10] = [
    [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
    [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
    [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
    [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
    [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
    [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
    [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
    [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
    [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
    [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
];

pub const GLYPH_WIDTH: usize = 5;
pub const GLYPH_HEIGHT: usize = 7;

/// Whether glyph `digit` has ink at `(col, row)`, origin top-left.
pub fn glyph_ink(digit: u8, col: usize, row: usize) -> bool {
    col < GLYPH_WIDTH && row < GLYPH_HEIGHT && GLYPHS[digit as usize][row] >> (GLYPH_WIDTH - 1 - col) & 1 == 1
}

/// Plate size in font units for an `n`-digit number: one unit of margin
/// around the text and one unit between glyphs.
pub fn plate_units(n: usize) -> (usize, usize) {
    (6 * n + 1, GLYPH_HEIGHT + 2)
}

/// Ink at plate unit `(ux, uy)` for the digit string `text`.
pub fn plate_ink(text: &[u8], ux: usize, uy: usize) -> bool {
    if ux == 0 || uy == 0 {
        return false;
    }
    let (k, cx) = ((ux - 1) / 6, (ux - 1) % 6);
    k < text.len() && glyph_ink(text[k] - b'0', cx, uy - 1)
}

/// Closest glyph to a sampled 5x7 ink pattern, with its Hamming distance.
pub fn match_glyph(pattern: &[[bool; GLYPH_WIDTH]; GLYPH_HEIGHT]) -> (u8, usize) {
    (0..10u8)
        .map(|d| {
            let mut miss = 0;
            for (row, bits) in pattern.iter().enumerate() {
                for (col, &ink) in bits.iter().enumerate() {
                    if ink != glyph_ink(d, col, row) {
                        miss += 1;
                    }
                }
            }
            (d, miss)
        })
        .min_by_key(|&(d, miss)| (miss, d))
        .expect("ten glyphs")
}
