#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "entrocert/acquisition.hpp"
#include "entrocert/coarsegrain.hpp"
#include "entrocert/errors.hpp"
#include "entrocert/filters.hpp"
#include "entrocert/probcore.hpp"
#include "entrocert/spdc.hpp"
#include "entrocert/witness.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace entrocert;

namespace {

using Arr = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Arr& a) {
  return {a.data(), a.data() + a.size()};
}

ProbMatrix to_matrix(const Arr& a) {
  if (a.ndim() != 2) throw DimensionMismatch("expected a 2-D array");
  return ProbMatrix(a.shape(0), a.shape(1), to_vector(a));
}

py::array_t<double> as_array(std::span<const double> v, std::size_t rows = 0, std::size_t cols = 0) {
  if (rows == 0) {
    py::array_t<double> out(v.size());
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
  }
  py::array_t<double> out({rows, cols});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "entrocert core: entropies, filter majorization, coarse-grained bounds and witnesses";
  m.attr("__version__") = ENTROCERT_VERSION;

  auto base = py::register_exception<Error>(m, "EntrocertError", PyExc_ValueError);
  py::register_exception<InvalidDistribution>(m, "InvalidDistribution", base.ptr());
  py::register_exception<DegenerateRatio>(m, "DegenerateRatio", base.ptr());
  py::register_exception<CoverageFailure>(m, "CoverageFailure", base.ptr());
  py::register_exception<ResolutionError>(m, "ResolutionError", base.ptr());
  py::register_exception<KindMismatch>(m, "KindMismatch", base.ptr());

  // Discrete entropies take numpy arrays; ProbVector validation applies.
  m.def("shannon_entropy", [](Arr p) { return shannon_entropy(ProbVector(to_vector(p))); }, "p"_a);
  m.def("relative_entropy",
        [](Arr p, Arr q) {
          return relative_entropy(ProbVector(to_vector(p)), ProbVector(to_vector(q)));
        },
        "p"_a, "q"_a);
  m.def("joint_entropy", [](Arr p) { return joint_entropy(to_matrix(p)); }, "p"_a);
  m.def("conditional_entropy",
        [](Arr p, const std::string& given) {
          if (given != "a" && given != "b") throw ConfigError("given must be 'a' or 'b'");
          return conditional_entropy(to_matrix(p), given == "a" ? Axis::A : Axis::B);
        },
        "p"_a, "given"_a = "b");
  m.def("mutual_information", [](Arr p) { return mutual_information(to_matrix(p)); }, "p"_a);
  m.def("majorizes",
        [](Arr p, Arr q) {
          const auto r = majorization(ProbVector(to_vector(p)), ProbVector(to_vector(q)));
          return py::make_tuple(r.verdict, r.margin);
        },
        "p"_a, "q"_a, "Returns (verdict, margin) for p majorizing q.");

  py::class_<Grid1D>(m, "Grid1D")
      .def(py::init([](double start, double step, Arr v) {
             return Grid1D::normalized(start, step, to_vector(v));
           }),
           "start"_a, "step"_a, "values"_a)
      .def_property_readonly("start", &Grid1D::start)
      .def_property_readonly("step", &Grid1D::step)
      .def_property_readonly("values", [](const Grid1D& g) { return as_array(g.values()); })
      .def("entropy", [](const Grid1D& g) { return continuous_entropy(g); });

  py::class_<Grid2D>(m, "Grid2D")
      .def_property_readonly("shape", [](const Grid2D& g) { return py::make_tuple(g.count_a(), g.count_b()); })
      .def_property_readonly("values", [](const Grid2D& g) { return as_array(g.values(), g.count_a(), g.count_b()); })
      .def("entropy", [](const Grid2D& g) { return continuous_entropy(g); });

  py::class_<FilterProfile>(m, "FilterProfile")
      .def_static("top_hat", &FilterProfile::top_hat, "width"_a, "center"_a = 0.0)
      .def_static("lorentzian", &FilterProfile::lorentzian, "fwhm"_a, "center"_a = 0.0)
      .def_static("gaussian", &FilterProfile::gaussian, "sigma"_a, "center"_a = 0.0)
      .def_static("voigt", &FilterProfile::voigt, "fwhm_lorentz"_a, "sigma_gauss"_a, "center"_a = 0.0)
      .def("__call__", &FilterProfile::evaluate, "omega"_a)
      .def("evaluate",
           [](const FilterProfile& f, Arr w) {
             auto in = to_vector(w);
             for (auto& x : in) x = f.evaluate(x);
             return as_array(in);
           },
           "omega"_a)
      .def("mass", &FilterProfile::mass, "lo"_a, "hi"_a)
      .def_property_readonly("center", &FilterProfile::center)
      .def_property_readonly("peak", &FilterProfile::peak)
      .def_property_readonly("width", &FilterProfile::width)
      .def("with_center", &FilterProfile::with_center, "center"_a)
      .def("__repr__", &FilterProfile::describe);

  m.def("majorized_by_tophat",
        [](const FilterProfile& f, double spacing) {
          const auto r = majorized_by_tophat(f, spacing);
          return py::make_tuple(r.verdict, r.margin);
        },
        "filter"_a, "spacing"_a);
  m.def("min_width_for_spacing",
        [](const std::string& kind, double spacing, double voigt_sigma) {
          ProfileKind k;
          if (kind == "lorentzian") k = ProfileKind::Lorentzian;
          else if (kind == "gaussian") k = ProfileKind::Gaussian;
          else if (kind == "top_hat") k = ProfileKind::TopHat;
          else if (kind == "voigt") k = ProfileKind::Voigt;
          else throw ConfigError("unknown kind '" + kind + "'");
          return min_width_for_spacing(k, spacing, voigt_sigma);
        },
        "kind"_a, "spacing"_a, "voigt_sigma"_a = 0.0);

  py::class_<FilterBank>(m, "FilterBank")
      .def(py::init<std::vector<FilterProfile>, double, std::vector<double>>(), "profiles"_a,
           "nominal_spacing"_a, "nominal_centers"_a)
      .def_static("regular", &FilterBank::regular, "prototype"_a, "first_center"_a, "spacing"_a, "count"_a)
      .def("__len__", &FilterBank::size)
      .def("__getitem__", [](const FilterBank& b, std::size_t n) {
        if (n >= b.size()) throw py::index_error();
        return b[n];
      })
      .def_property_readonly("nominal_spacing", &FilterBank::nominal_spacing)
      .def_property_readonly("nominal_centers", &FilterBank::nominal_centers)
      .def_property_readonly("uniform", &FilterBank::uniform);

  m.def("mean_filter", &mean_filter, "bank"_a);
  m.def("filter_weight", &filter_weight, "f_n"_a, "target"_a, "search_window"_a = 50.0);
  m.def("bank_weights",
        [](const FilterBank& bank) {
          const auto r = bank_weights(bank);
          return py::dict("w0"_a = r.w0, "argmin_index"_a = r.argmin_index, "per_filter"_a = r.per_filter_w);
        },
        "bank"_a);
  m.def("lorentzian_width_weight", &lorentzian_width_weight, "epsilon"_a);
  m.def("lorentzian_shift_weight", &lorentzian_shift_weight, "delta_hwhm"_a);
  m.def("lorentzian_shift_weight_linear", &lorentzian_shift_weight_linear, "delta_hwhm"_a);

  py::class_<CoarseGrained2D>(m, "CoarseGrained2D")
      .def_property_readonly("probs",
                             [](const CoarseGrained2D& c) { return as_array(c.probs.values(), c.probs.rows(), c.probs.cols()); })
      .def_readonly("bin_width_a", &CoarseGrained2D::bin_width_a)
      .def_readonly("bin_width_b", &CoarseGrained2D::bin_width_b)
      .def_readonly("coverage", &CoarseGrained2D::coverage)
      .def_readonly("warnings", &CoarseGrained2D::warnings);

  py::class_<EntropyBound>(m, "EntropyBound")
      .def_readonly("value_bits", &EntropyBound::value_bits)
      .def_property_readonly("kind", [](const EntropyBound& b) { return to_string(b.kind); })
      .def_readonly("correction_w0", &EntropyBound::correction_w0)
      .def_readonly("valid", &EntropyBound::valid)
      .def_readonly("provenance", &EntropyBound::provenance)
      .def("__repr__", [](const EntropyBound& b) {
        std::ostringstream os;
        os << "EntropyBound(" << b.value_bits << " bits, " << to_string(b.kind) << (b.valid ? "" : ", invalid") << ")";
        return os.str();
      });

  m.def("tophat_bin", py::overload_cast<const Grid2D&, double, double>(&tophat_bin), "rho"_a, "width_a"_a, "width_b"_a);
  m.def("filter_sample_joint",
        [](const Grid2D& rho, const FilterBank& a, const FilterBank& b) { return filter_sample_joint(rho, a, b); },
        "rho"_a, "bank_a"_a, "bank_b"_a);
  m.def("conditional_entropy_bound",
        [](const CoarseGrained2D& cg, double w0, bool precondition) { return conditional_entropy_bound(cg, w0, precondition); },
        "cg"_a, "w0"_a = 1.0, "precondition_met"_a = true);
  m.def("joint_entropy_bound", &joint_entropy_bound, "cg"_a, "precondition_met"_a = true);
  m.def("check_bank",
        [](const FilterBank& b) {
          const auto r = check_bank(b);
          return py::make_tuple(r.all_majorized, r.min_margin, r.worst_index);
        },
        "bank"_a);

  py::class_<SpdcParams>(m, "SpdcParams")
      .def(py::init([](double sp, double sm) {
             SpdcParams p;
             p.pump_sigma_rad_per_s = sp;
             p.phasematch_sigma_rad_per_s = sm;
             return p;
           }),
           "pump_sigma_rad_per_s"_a, "phasematch_sigma_rad_per_s"_a)
      .def_readwrite("pump_sigma_rad_per_s", &SpdcParams::pump_sigma_rad_per_s)
      .def_readwrite("phasematch_sigma_rad_per_s", &SpdcParams::phasematch_sigma_rad_per_s)
      .def_readwrite("crystal_length_mm", &SpdcParams::crystal_length_mm)
      .def_readwrite("gvd_fs2_per_mm", &SpdcParams::gvd_fs2_per_mm);
  m.def("joint_spectral_density",
        [](const SpdcParams& p, double start_a, double step_a, std::size_t count_a, double start_b, double step_b,
           std::size_t count_b) {
          return joint_spectral_density(p, GridSpec2D{start_a, step_a, count_a, start_b, step_b, count_b});
        },
        "params"_a, "start_a"_a, "step_a"_a, "count_a"_a, "start_b"_a, "step_b"_a, "count_b"_a);
  m.def("spdc_conditional_entropy", &spdc_conditional_entropy, "params"_a);
  m.def("intrinsic_timing_sigma", &intrinsic_timing_sigma, "crystal_length_mm"_a, "gvd_fs2_per_mm"_a);
  m.def("gaussian_max_entropy", &gaussian_max_entropy, "sigma"_a);
  m.def("fwhm_from_sigma", &fwhm_from_sigma, "sigma"_a);
  m.def("sigma_from_fwhm", &sigma_from_fwhm, "fwhm"_a);

  m.def("witness_threshold", [](const std::string& q) { return witness_threshold(inequality_from_string(q)); },
        "inequality"_a = "conditional");
  m.def("frequency_budget",
        [](double h_t, double wavelength_m, const std::string& q) {
          const auto b = frequency_budget(h_t, wavelength_m, inequality_from_string(q));
          return py::dict("max_h_freq_bits"_a = b.max_h_freq_bits, "max_sigma_rad_per_s"_a = b.max_sigma_rad_per_s,
                          "max_fwhm_gauss_m"_a = b.max_fwhm_gauss_m,
                          "max_fwhm_lorentz_rad_per_s"_a = b.max_fwhm_lorentz_rad_per_s);
        },
        "h_time_bits"_a, "wavelength_m"_a, "inequality"_a = "conditional");
  m.def("grating_resolution", &grating_resolution, "grooves_per_mm"_a, "beam_diameter_mm"_a, "center_freq_hz"_a);
  m.def("ebits_lower_bound",
        [](double x) {
          const auto e = ebits_lower_bound(x);
          return py::dict("formula_footnote"_a = e.formula_footnote, "formula_e_based"_a = e.formula_e_based,
                          "matches_reported"_a = e.matches_reported, "note"_a = e.note);
        },
        "uncertainty_product"_a);
  m.def("timing_entropy_bound",
        [](double sigma_s, double bin_width_s) { return timing_entropy_bound(expected_histogram(sigma_s, bin_width_s, 1.0)); },
        "sigma_s"_a, "bin_width_s"_a,
        "Timing bound of the expected histogram of a Gaussian timing difference.");

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          const int code = cli::run(args, out, err);
          return py::make_tuple(code, out.str(), err.str());
        },
        "args"_a, "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
