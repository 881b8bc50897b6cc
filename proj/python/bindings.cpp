#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "tractfeat/cli.hpp"
#include "tractfeat/connectome.hpp"
#include "tractfeat/error.hpp"
#include "tractfeat/nifti.hpp"
#include "tractfeat/odf_field.hpp"
#include "tractfeat/regression.hpp"
#include "tractfeat/tracker.hpp"

namespace py = pybind11;
using namespace tractfeat;

namespace {

using FortranArray = py::array_t<double, py::array::f_style | py::array::forcecast>;

VolumeKind parse_kind(const std::string& kind) {
    if (kind == "scalar") return VolumeKind::scalar;
    if (kind == "label") return VolumeKind::label;
    if (kind == "mask") return VolumeKind::mask;
    throw ValidationError("volume kind must be scalar, label or mask");
}

const char* kind_name(VolumeKind kind) {
    switch (kind) {
        case VolumeKind::label: return "label";
        case VolumeKind::mask: return "mask";
        default: return "scalar";
    }
}

// numpy (nx, ny, nz) in Fortran order matches the x-fastest layout.
Volume to_volume(const FortranArray& data, const Mat4& affine, VolumeKind kind) {
    if (data.ndim() != 3) throw ShapeError("volume array must be 3-D");
    const Index3 dims{static_cast<int>(data.shape(0)), static_cast<int>(data.shape(1)), static_cast<int>(data.shape(2))};
    std::vector<double> values(data.data(), data.data() + data.size());
    return Volume(GridSpec(dims, affine), kind, std::move(values));
}

py::array_t<double> to_array(const Volume& v) {
    const Index3 d = v.grid().dims();
    const auto s = static_cast<py::ssize_t>(sizeof(double));
    py::array_t<double> out({d[0], d[1], d[2]}, {s, s * d[0], s * d[0] * d[1]});
    std::copy(v.data().begin(), v.data().end(), out.mutable_data());
    return out;
}

Tractogram to_tractogram(const std::vector<Eigen::MatrixX3d>& lines) {
    Tractogram t;
    for (const auto& m : lines) {
        Streamline s;
        for (Eigen::Index r = 0; r < m.rows(); ++r) s.push_back(m.row(r).transpose());
        t.push_back(s);
    }
    return t;
}

std::vector<Eigen::MatrixX3d> from_tractogram(const Tractogram& t) {
    std::vector<Eigen::MatrixX3d> out;
    out.reserve(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto line = t[i];
        Eigen::MatrixX3d m(static_cast<Eigen::Index>(line.size()), 3);
        for (std::size_t p = 0; p < line.size(); ++p) m.row(static_cast<Eigen::Index>(p)) = line[p].transpose();
        out.push_back(std::move(m));
    }
    return out;
}

TrackingParams tracking_params(const py::kwargs& kw) {
    TrackingParams p;
    for (const auto& [key, value] : kw) {
        const auto name = key.cast<std::string>();
        if (name == "qa_threshold") p.qa_threshold = value.cast<double>();
        else if (name == "angular_threshold_deg") p.angular_threshold_deg = value.cast<double>();
        else if (name == "step_mm") p.step_mm = value.cast<double>();
        else if (name == "smoothing") p.smoothing = value.cast<double>();
        else if (name == "min_length_mm") p.min_length_mm = value.cast<double>();
        else if (name == "max_length_mm") p.max_length_mm = value.cast<double>();
        else if (name == "tip_iterations") p.tip_iterations = value.cast<int>();
        else if (name == "max_tracts") p.max_tracts = value.is_none() ? std::nullopt : std::optional(value.cast<std::size_t>());
        else throw ValidationError("unknown tracking parameter '" + name + "'");
    }
    validate(p);
    return p;
}

Vec3 vec3(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

}  // namespace

PYBIND11_MODULE(_tractfeat, m) {
    m.doc() = "Tractography-based lesion features and mRS outcome regression";

    static py::exception<Error> base(m, "TractfeatError", PyExc_RuntimeError);
    py::register_exception<FormatError>(m, "FormatError", base);
    py::register_exception<UnsupportedError>(m, "UnsupportedError", base);
    py::register_exception<ShapeError>(m, "ShapeError", base);
    py::register_exception<IoError>(m, "IoError", base);
    py::register_exception<ValidationError>(m, "ValidationError", base);
    py::register_exception<DegenerateInputError>(m, "DegenerateInputError", base);

    m.def(
        "load_volume",
        [](const std::filesystem::path& path) {
            const Volume v = load_volume(path);
            return py::make_tuple(to_array(v), v.grid().affine(), kind_name(v.kind()));
        },
        py::arg("path"), "Read a NIfTI-1 image: (data[nx, ny, nz], affine 4x4, kind).");
    m.def(
        "save_volume",
        [](const std::filesystem::path& path, const FortranArray& data, const Mat4& affine, const std::string& kind) {
            save_volume(to_volume(data, affine, parse_kind(kind)), path);
        },
        py::arg("path"), py::arg("data"), py::arg("affine") = Mat4::Identity(), py::arg("kind") = "scalar");

    py::class_<OdfField>(m, "Field")
        .def_static("load", &load_field, py::arg("path"))
        .def_static(
            "phantom",
            [](const std::string& kind, std::array<int, 3> dims, std::array<double, 3> voxel_size, double qa,
               std::array<double, 3> axis, std::optional<std::array<double, 3>> center, double radius,
               std::array<double, 3> plane_normal, double tube_radius, std::array<double, 3> second_axis,
               double slab_half_width) {
                PhantomSpec spec;
                if (kind == "straight") spec.kind = PhantomKind::straight;
                else if (kind == "arc") spec.kind = PhantomKind::arc;
                else if (kind == "crossing") spec.kind = PhantomKind::crossing;
                else throw ValidationError("unknown phantom kind '" + kind + "'");
                spec.dims = dims;
                spec.voxel_size = voxel_size;
                spec.qa_value = qa;
                spec.axis = vec3(axis);
                if (center) {
                    spec.center_mm = vec3(*center);
                } else {
                    for (int i = 0; i < 3; ++i) spec.center_mm[i] = (dims[i] - 1) * voxel_size[i] / 2.0;
                }
                spec.radius_mm = radius;
                spec.plane_normal = vec3(plane_normal);
                spec.tube_radius_mm = tube_radius;
                spec.second_axis = vec3(second_axis);
                spec.slab_half_width_mm = slab_half_width;
                return make_phantom(spec);
            },
            py::arg("kind") = "straight", py::arg("dims") = std::array<int, 3>{10, 10, 10},
            py::arg("voxel_size") = std::array<double, 3>{1, 1, 1}, py::arg("qa") = 1.0,
            py::arg("axis") = std::array<double, 3>{1, 0, 0}, py::arg("center") = py::none(), py::arg("radius") = 20.0,
            py::arg("plane_normal") = std::array<double, 3>{0, 0, 1}, py::arg("tube_radius") = 1.5,
            py::arg("second_axis") = std::array<double, 3>{0, 1, 0}, py::arg("slab_half_width") = 2.0)
        .def("save", [](const OdfField& f, const std::filesystem::path& path) { save_field(f, path); })
        .def_property_readonly("dims", [](const OdfField& f) { return f.grid().dims(); })
        .def_property_readonly("affine", [](const OdfField& f) { return f.grid().affine(); })
        .def_property_readonly("mask", [](const OdfField& f) { return to_array(f.brain_mask()); })
        .def_property_readonly("max_peaks", &OdfField::max_peaks)
        .def("peaks", [](const OdfField& f, std::array<int, 3> ijk) {
            py::list out;
            for (const Peak& p : f.peaks(ijk)) out.append(py::make_tuple(p.direction, p.qa));
            return out;
        });

    m.def(
        "track",
        [](const OdfField& field, std::size_t threads, const py::kwargs& kw) {
            const TrackingParams params = tracking_params(kw);
            Tractogram t;
            {
                py::gil_scoped_release release;
                t = track_whole_brain(field, params, threads);
            }
            return from_tractogram(t);
        },
        py::arg("field"), py::arg("threads") = 1,
        "Whole-brain deterministic tracking; keyword arguments override tracking defaults.");
    m.def(
        "filter_roi",
        [](const std::vector<Eigen::MatrixX3d>& lines, const FortranArray& roi, const Mat4& affine) {
            return from_tractogram(filter_roi(to_tractogram(lines), to_volume(roi, affine, VolumeKind::mask)));
        },
        py::arg("streamlines"), py::arg("roi"), py::arg("affine") = Mat4::Identity());
    m.def(
        "prune_tip",
        [](const std::vector<Eigen::MatrixX3d>& lines, const FortranArray& roi, const Mat4& affine, int iterations) {
            return from_tractogram(
                prune_tip(to_tractogram(lines), to_volume(roi, affine, VolumeKind::mask), iterations));
        },
        py::arg("streamlines"), py::arg("roi"), py::arg("affine") = Mat4::Identity(), py::arg("iterations") = 1);

    m.def(
        "tractographic",
        [](const std::vector<Eigen::MatrixX3d>& lines, const FortranArray& lesion, const FortranArray& atlas,
           const Mat4& affine) {
            const Atlas a(to_volume(atlas, affine, VolumeKind::label));
            const TractographicResult r =
                build_tractographic(to_tractogram(lines), to_volume(lesion, affine, VolumeKind::mask), a);
            Eigen::MatrixXd counts(r.disruption.size(), r.disruption.size());
            for (std::size_t i = 0; i < r.disruption.size(); ++i)
                for (std::size_t j = 0; j < r.disruption.size(); ++j)
                    counts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        static_cast<double>(r.disruption(i, j));
            py::dict out;
            out["labels"] = a.labels();
            out["disruption"] = counts;
            out["load"] = r.load;
            out["weights"] = r.weights;
            out["feature"] = r.feature.values;
            out["degenerate"] = r.degenerate;
            out["warning"] = r.warning;
            return out;
        },
        py::arg("streamlines"), py::arg("lesion"), py::arg("atlas"), py::arg("affine") = Mat4::Identity(),
        "Disruption matrix, region load and tractographic feature for lesion-filtered streamlines.");
    m.def(
        "first_order",
        [](const FortranArray& lesion, const Mat4& affine) {
            const Volume v = to_volume(lesion, affine, VolumeKind::mask);
            py::dict out;
            out["volumetric"] = volumetric_feature(v).values;
            out["spatial"] = spatial_feature(v).values;
            out["morphological"] = morphological_feature(v).values;
            return out;
        },
        py::arg("lesion"), py::arg("affine") = Mat4::Identity());

    m.def("round_mrs", &round_mrs, py::arg("raw"));
    m.def(
        "score_predictions",
        [](const std::vector<int>& truth, const std::vector<int>& predicted) {
            const Metrics s = score_predictions(truth, predicted);
            return py::make_tuple(s.accuracy, s.mae_mean, s.mae_std);
        },
        py::arg("truth"), py::arg("predicted"), "(accuracy, mae_mean, mae_std)");
    m.def(
        "run_pipeline",
        [](const Eigen::MatrixXd& X, const std::vector<int>& y, std::vector<std::string> subject_ids,
           std::vector<std::string> feature_names, int n_trees, int max_depth, std::optional<int> mtry,
           std::uint64_t seed, std::size_t threads) {
            Dataset data{X, y, std::move(feature_names), std::move(subject_ids)};
            if (data.feature_names.empty())
                for (Eigen::Index c = 0; c < X.cols(); ++c) data.feature_names.push_back("f" + std::to_string(c));
            if (data.subject_ids.empty())
                for (std::size_t i = 0; i < y.size(); ++i) data.subject_ids.push_back("s" + std::to_string(i));
            ForestSpec spec{.n_trees = n_trees, .max_depth = max_depth, .min_samples_split = 2, .mtry = mtry,
                            .rng_seed = seed};
            PipelineResult r;
            {
                py::gil_scoped_release release;
                r = run_pipeline(data, spec, threads);
            }
            py::list per_subject;
            for (const auto& s : r.report.per_subject)
                per_subject.append(py::make_tuple(s.id, s.truth, s.predicted, s.raw));
            py::dict out;
            out["selected"] = r.selected;
            out["mae_curve"] = r.rfe.mae_by_cardinality;
            out["importance"] = r.importance;
            out["accuracy"] = r.report.accuracy;
            out["mae_mean"] = r.report.mae_mean;
            out["mae_std"] = r.report.mae_std;
            out["per_subject"] = per_subject;
            return out;
        },
        py::arg("X"), py::arg("y"), py::arg("subject_ids") = std::vector<std::string>{},
        py::arg("feature_names") = std::vector<std::string>{}, py::arg("n_trees") = 300, py::arg("max_depth") = 3,
        py::arg("mtry") = py::none(), py::arg("seed") = 0, py::arg("threads") = 1,
        "z-score, zero-variance drop, RFE with leave-one-out MAE, then leave-one-out evaluation.");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run the command line in-process: (exit code, stdout, stderr).");
}
