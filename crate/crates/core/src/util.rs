//! Small shared helpers.

/// All tuples of the given arity over 0..n in lexicographic order.
pub fn tuples(n: u32, arity: usize) -> Tuples {
    Tuples { n, next: if n == 0 && arity > 0 { None } else { Some(vec![0; arity]) } }
}

pub struct Tuples {
    n: u32,
    next: Option<Vec<u32>>,
}

impl Iterator for Tuples {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.n {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(cur)
    }
}

/// Bits needed for values below n+1: ⌈log2(n+1)⌉.
pub fn bit_len(n: u64) -> u32 {
    64 - n.leading_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuple_counts() {
        assert_eq!(tuples(3, 2).count(), 9);
        assert_eq!(tuples(3, 0).collect::<Vec<_>>(), vec![Vec::<u32>::new()]);
        assert_eq!(tuples(0, 1).count(), 0);
        assert_eq!(tuples(2, 2).nth(2), Some(vec![1, 0]));
    }

    #[test]
    fn lengths() {
        assert_eq!([1, 2, 3, 4, 7, 8].map(bit_len), [1, 2, 2, 3, 3, 4]);
    }
}
