//! Python module `pymodemlab`.

use pyo3::exceptions::{PyMemoryError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use modemlab::cli::{self, Profile, RunConfig};
use modemlab::evaluation::{self, ber_sweep, NeuralDetector, SweepSettings};
use modemlab::nn::OutputActivation;
use modemlab::{channel, Error, SnrSpec, Task};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Config(_) | Error::Format(_) => PyValueError::new_err(e.to_string()),
        Error::Capacity { .. } => PyMemoryError::new_err(e.to_string()),
        Error::Divergence { .. } => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for modemlab::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Bits as a Python list of ints; `Vec<u8>` would convert to `bytes`.
fn bit_list(bits: Vec<u8>) -> Vec<u32> {
    bits.into_iter().map(u32::from).collect()
}

fn snr(db: f64) -> PyResult<SnrSpec> {
    SnrSpec::new(db).py()
}

#[pyclass(name = "GamConstellation", frozen)]
struct PyGam(modemlab::GamConstellation);

#[pymethods]
impl PyGam {
    #[new]
    #[pyo3(signature = (k1, power = 1.0))]
    fn new(k1: u32, power: f64) -> PyResult<Self> {
        Ok(Self(modemlab::GamConstellation::build(k1, power).py()?))
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    #[getter]
    fn power(&self) -> f64 {
        self.0.power()
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta()
    }

    /// Points s_1..s_M as (re, im) pairs.
    fn points(&self) -> Vec<(f64, f64)> {
        self.0.points().iter().map(|s| (s.re, s.im)).collect()
    }

    fn mean_energy(&self) -> f64 {
        self.0.mean_energy()
    }

    fn bits_to_symbol(&self, bits: Vec<u8>) -> PyResult<(f64, f64)> {
        let s = self.0.bits_to_symbol(&bits).py()?;
        Ok((s.re, s.im))
    }

    /// Bits of the 1-based index `m`.
    fn symbol_to_bits(&self, m: usize) -> PyResult<Vec<u32>> {
        self.0.symbol_to_bits(m).py().map(bit_list)
    }
}

#[pyclass(name = "GaussianCodebook", frozen)]
struct PyCodebook(modemlab::GaussianCodebook);

#[pymethods]
impl PyCodebook {
    #[new]
    #[pyo3(signature = (k2, rate = 0.5, power = 1.0, seed = 1))]
    fn new(k2: u32, rate: f64, power: f64, seed: u64) -> PyResult<Self> {
        Ok(Self(modemlab::GaussianCodebook::build(k2, rate, power, seed).py()?))
    }

    #[getter]
    fn n2(&self) -> usize {
        self.0.n2()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.0.len()).map(|i| self.0.row(i).to_vec()).collect()
    }

    fn empirical_power(&self) -> f64 {
        self.0.empirical_power()
    }

    fn encode(&self, bits: Vec<u8>) -> PyResult<Vec<f64>> {
        self.0.encode(&bits).py()
    }
}

/// Transmit chain for one task: clean words, noise calibration and the ML detector.
#[pyclass(name = "Link", frozen)]
struct PyLink {
    cfg: RunConfig,
    link: modemlab::Link,
}

#[pymethods]
impl PyLink {
    #[new]
    #[pyo3(signature = (task, k, n1 = 10, rate = 0.5, power = 1.0, codebook_seed = 1))]
    fn new(task: &str, k: u32, n1: usize, rate: f64, power: f64, codebook_seed: u64) -> PyResult<Self> {
        let mut cfg = RunConfig::for_profile(Profile::Desk);
        cfg.task = Task::from_name(task).py()?;
        cfg.k = k;
        cfg.k_grid = vec![k];
        cfg.n1 = n1;
        cfg.rate = rate;
        cfg.power = power;
        cfg.codebook_seed = codebook_seed;
        cfg.validate().py()?;
        let link = cfg.link(k).py()?;
        Ok(Self { cfg, link })
    }

    #[getter]
    fn feature_dim(&self) -> usize {
        self.link.feature_dim()
    }

    #[getter]
    fn messages(&self) -> usize {
        self.link.messages()
    }

    fn clean(&self, index: usize) -> PyResult<Vec<f64>> {
        if index >= self.link.messages() {
            return Err(PyValueError::new_err("message index out of range"));
        }
        Ok(self.link.clean(index).to_vec())
    }

    fn sigma2(&self, eb_n0_db: f64) -> PyResult<f64> {
        self.link.sigma2(snr(eb_n0_db)?).py()
    }

    fn ml_detect(&self, y: Vec<f64>) -> PyResult<Vec<u32>> {
        modemlab::ml_detect(&y, self.link.candidates()).py().map(bit_list)
    }

    /// Trains a desk-profile network at one Eb/N0.
    #[pyo3(signature = (eb_n0_db, samples_per_index = 1024, epochs = 10, seed = 1, hidden = None))]
    fn train(
        &self,
        py: Python<'_>,
        eb_n0_db: f64,
        samples_per_index: usize,
        epochs: usize,
        seed: u64,
        hidden: Option<Vec<usize>>,
    ) -> PyResult<PyMlp> {
        let mut cfg = self.cfg.clone();
        cfg.epochs = epochs;
        cfg.seed = seed;
        if let Some(h) = hidden {
            cfg.hidden = h;
        }
        cfg.validate().py()?;
        let s = snr(eb_n0_db)?;
        let (net, report) = py.detach(|| cli::train_network(&cfg, &self.link, s, samples_per_index)).py()?;
        Ok(PyMlp {
            net,
            losses: report.epoch_losses,
        })
    }

    /// BER points for ML (`model=None`) or a trained network.
    #[pyo3(signature = (eb_n0_db, model = None, max_trials = 200_000, seed = 1))]
    fn ber_sweep<'py>(
        &self,
        py: Python<'py>,
        eb_n0_db: Vec<f64>,
        model: Option<PyRef<'py, PyMlp>>,
        max_trials: u64,
        seed: u64,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let snrs = eb_n0_db.into_iter().map(snr).collect::<PyResult<Vec<_>>>()?;
        let settings = SweepSettings {
            max_trials,
            min_trials: SweepSettings::default().min_trials.min(max_trials),
            ..SweepSettings::default()
        };
        let report = match &model {
            Some(m) => {
                let det = NeuralDetector::new(&m.net).py()?;
                py.detach(|| ber_sweep(&det, &self.link, &snrs, &settings, seed))
            }
            None => py.detach(|| ber_sweep(self.link.candidates(), &self.link, &snrs, &settings, seed)),
        }
        .py()?;
        report
            .points
            .iter()
            .map(|p| {
                let d = PyDict::new(py);
                d.set_item("detector", &report.detector)?;
                d.set_item("eb_n0_db", p.eb_n0_db)?;
                d.set_item("errors", p.errors)?;
                d.set_item("bits", p.bits)?;
                d.set_item("ber", p.ber)?;
                d.set_item("ci", (p.ci_lo, p.ci_hi))?;
                Ok(d)
            })
            .collect()
    }
}

#[pyclass(name = "Mlp")]
struct PyMlp {
    net: modemlab::Mlp,
    losses: Vec<f64>,
}

#[pymethods]
impl PyMlp {
    /// He-uniform network; `output` is "sigmoid" or "linear".
    #[new]
    #[pyo3(signature = (dims, seed = 1, output = "sigmoid"))]
    fn new(dims: Vec<usize>, seed: u64, output: &str) -> PyResult<Self> {
        let act = OutputActivation::from_name(output).py()?;
        Ok(Self {
            net: modemlab::Mlp::he_uniform(&dims, act, seed).py()?,
            losses: Vec::new(),
        })
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.net.dims().to_vec()
    }

    #[getter]
    fn epoch_losses(&self) -> Vec<f64> {
        self.losses.clone()
    }

    fn param_count(&self) -> usize {
        self.net.param_count()
    }

    fn op_count(&self) -> u64 {
        self.net.op_count()
    }

    fn forward(&self, y: Vec<f64>) -> PyResult<Vec<f64>> {
        self.net.forward(&y).py()
    }

    fn predict_bits(&self, y: Vec<f64>) -> PyResult<Vec<u32>> {
        self.net.predict_bits(&y).py().map(bit_list)
    }
}

#[pyfunction]
#[pyo3(signature = (eb_n0_db, k1, n1 = 10, power = 1.0))]
fn sigma2_for_demod(eb_n0_db: f64, k1: usize, n1: usize, power: f64) -> PyResult<f64> {
    channel::sigma2_for_demod(snr(eb_n0_db)?, k1, n1, power).py()
}

#[pyfunction]
#[pyo3(signature = (eb_n0_db, k2, n2, power = 1.0))]
fn sigma2_for_decode(eb_n0_db: f64, k2: usize, n2: usize, power: f64) -> PyResult<f64> {
    channel::sigma2_for_decode(snr(eb_n0_db)?, k2, n2, power).py()
}

#[pyfunction]
fn mac_count(hidden: Vec<usize>, input_dim: usize, k: usize) -> PyResult<u64> {
    evaluation::mac_count(&hidden, input_dim, k).py()
}

#[pyfunction]
fn ber(b_hat: Vec<u8>, b: Vec<u8>) -> PyResult<f64> {
    evaluation::ber(&b_hat, &b).py()
}

#[pyfunction]
fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    evaluation::wilson_interval(errors, trials)
}

#[pymodule]
fn pymodemlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGam>()?;
    m.add_class::<PyCodebook>()?;
    m.add_class::<PyLink>()?;
    m.add_class::<PyMlp>()?;
    m.add_function(wrap_pyfunction!(sigma2_for_demod, m)?)?;
    m.add_function(wrap_pyfunction!(sigma2_for_decode, m)?)?;
    m.add_function(wrap_pyfunction!(mac_count, m)?)?;
    m.add_function(wrap_pyfunction!(ber, m)?)?;
    m.add_function(wrap_pyfunction!(wilson_interval, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_registers_and_runs() {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "pymodemlab").unwrap();
            pymodemlab(&m).unwrap();
            let gam = m.getattr("GamConstellation").unwrap().call1((2,)).unwrap();
            assert_eq!(gam.getattr("order").unwrap().extract::<usize>().unwrap(), 4);
            let bits = gam.call_method1("symbol_to_bits", (4,)).unwrap();
            assert_eq!(bits.extract::<Vec<u32>>().unwrap(), vec![1, 1]);
            let macs = m.getattr("mac_count").unwrap().call1((vec![1024, 512, 256, 128], 10, 2)).unwrap();
            assert_eq!(macs.extract::<u64>().unwrap(), 1_397_248);
            let err = m.getattr("GamConstellation").unwrap().call1((0,)).unwrap_err();
            assert!(err.is_instance_of::<PyValueError>(py));
        });
    }
}
