use crate::error::{Error, Result};

/// Simulator runs with every input known: `(x, omega) -> y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationDataset {
    x: Vec<Vec<f64>>,
    omega: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl SimulationDataset {
    pub fn new(x: Vec<Vec<f64>>, omega: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || omega.len() != y.len() {
            return Err(Error::Dimension(format!(
                "simulation dataset rows disagree: x {}, omega {}, y {}",
                x.len(),
                omega.len(),
                y.len()
            )));
        }
        check_rows("x", &x)?;
        check_rows("omega", &omega)?;
        check_finite("y", &y)?;
        Ok(Self { x, omega, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn omega(&self) -> &[Vec<f64>] {
        &self.omega
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

/// Field observations where only the controllable input `x` is known.
#[derive(Debug, Clone, PartialEq)]
pub struct RealDataset {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl RealDataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Dimension(format!(
                "real dataset rows disagree: x {}, y {}",
                x.len(),
                y.len()
            )));
        }
        check_rows("x", &x)?;
        check_finite("y", &y)?;
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Repeats every row `times` times.
    pub fn replicated(&self, times: usize) -> Self {
        let mut x = Vec::with_capacity(self.len() * times);
        let mut y = Vec::with_capacity(self.len() * times);
        for _ in 0..times {
            x.extend(self.x.iter().cloned());
            y.extend(self.y.iter().copied());
        }
        Self { x, y }
    }
}

fn check_rows(name: &str, rows: &[Vec<f64>]) -> Result<()> {
    if let Some(first) = rows.first() {
        let width = first.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(Error::Dimension(format!(
                    "{name} row {i} has {} columns, expected {width}",
                    r.len()
                )));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} row {i} is not finite")));
            }
        }
    }
    Ok(())
}

fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!("{name}[{i}] is not finite"))),
        None => Ok(()),
    }
}
