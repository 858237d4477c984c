//! Truncated Taylor arithmetic: a jet stores `c_m = g^{(m)}(x) / m!`.

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Jet(pub Vec<f64>);

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = value;
        Jet(c)
    }

    pub fn variable(x: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = x;
        if order > 0 {
            c[1] = 1.0;
        }
        Jet(c)
    }

    fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn add(&self, other: &Jet) -> Jet {
        Jet(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        Jet(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Jet {
        Jet(self.0.iter().map(|a| -a).collect())
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let n = self.order();
        Jet((0..=n)
            .map(|k| (0..=k).map(|i| self.0[i] * other.0[k - i]).sum())
            .collect())
    }

    pub fn recip(&self) -> Jet {
        let n = self.order();
        let s = &self.0;
        let mut r = vec![0.0; n + 1];
        r[0] = 1.0 / s[0];
        for k in 1..=n {
            let acc: f64 = (1..=k).map(|i| s[i] * r[k - i]).sum();
            r[k] = -acc * r[0];
        }
        Jet(r)
    }

    pub fn exp(&self) -> Jet {
        let n = self.order();
        let s = &self.0;
        let mut e = vec![0.0; n + 1];
        e[0] = s[0].exp();
        for k in 1..=n {
            let acc: f64 = (1..=k).map(|i| i as f64 * s[i] * e[k - i]).sum();
            e[k] = acc / k as f64;
        }
        Jet(e)
    }

    /// Derivatives `g, g′, …, g^{(n)}`.
    pub fn derivatives(&self) -> Vec<f64> {
        let mut factorial = 1.0;
        self.0
            .iter()
            .enumerate()
            .map(|(m, c)| {
                if m > 0 {
                    factorial *= m as f64;
                }
                c * factorial
            })
            .collect()
    }
}
