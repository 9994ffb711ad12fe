/// `(channels, height, width)` after a valid, stride-1 convolution.
pub fn conv(shape: (usize, usize, usize), filters: usize, kh: usize, kw: usize) -> (usize, usize, usize) {
    (filters, shape.1 + 1 - kh, shape.2 + 1 - kw)
}

/// After non-overlapping 2x2 pooling that drops a trailing odd row or column.
pub fn pool2(shape: (usize, usize, usize)) -> (usize, usize, usize) {
    (shape.0, shape.1 / 2, shape.2 / 2)
}
