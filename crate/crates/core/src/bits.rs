//! Bitset helpers over `u64`. Bit `i` stands for atom or point `i`.

pub type Bits = u64;

/// Largest number of atoms or points a bitset can index.
pub const CAPACITY: usize = 64;

pub const fn full(n: usize) -> Bits {
    if n >= 64 {
        !0
    } else {
        (1u64 << n) - 1
    }
}

pub const fn bit(i: usize) -> Bits {
    1u64 << i
}

pub const fn has(b: Bits, i: usize) -> bool {
    b >> i & 1 == 1
}

pub const fn subset(a: Bits, b: Bits) -> bool {
    a & !b == 0
}

pub const fn count(b: Bits) -> usize {
    b.count_ones() as usize
}

/// Indices of the set bits, ascending.
pub fn ones(b: Bits) -> Ones {
    Ones(b)
}

#[derive(Clone, Debug)]
pub struct Ones(Bits);

impl Iterator for Ones {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = count(self.0);
        (n, Some(n))
    }
}

/// Every submask of `mask`, from `0` up to `mask`, in increasing order.
pub fn submasks(mask: Bits) -> Submasks {
    Submasks {
        mask,
        next: Some(0),
    }
}

#[derive(Clone, Debug)]
pub struct Submasks {
    mask: Bits,
    next: Option<Bits>,
}

impl Iterator for Submasks {
    type Item = Bits;

    fn next(&mut self) -> Option<Bits> {
        let cur = self.next?;
        self.next = if cur == self.mask {
            None
        } else {
            Some((cur | !self.mask).wrapping_add(1) & self.mask)
        };
        Some(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn submasks_enumerate_in_order() {
        let v: Vec<_> = submasks(0b1010).collect();
        assert_eq!(v, [0, 0b10, 0b1000, 0b1010]);
        assert_eq!(submasks(0).count(), 1);
        assert_eq!(submasks(full(5)).count(), 32);
    }

    #[test]
    fn ones_lists_indices() {
        assert_eq!(ones(0b1011).collect::<Vec<_>>(), [0, 1, 3]);
        assert_eq!(ones(1 << 63).collect::<Vec<_>>(), [63]);
        assert_eq!(full(64), !0);
    }
}
