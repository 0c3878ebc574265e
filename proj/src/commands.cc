#include "backaction/commands.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include "json.hpp"

#include "backaction/errors.h"
#include "backaction/oracle.h"
#include "backaction/purity.h"
#include "backaction/statistics.h"

namespace backaction {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
}

namespace {

class CsvWriter {
   public:
    CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path), path_(path) {
        if (!out_) {
            throw ConfigError("cannot write " + path.string());
        }
        row(header);
    }

    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            out_ << (i ? "," : "") << cells[i];
        }
        out_ << '\n';
    }

    const fs::path& path() const { return path_; }

   private:
    std::ofstream out_;
    fs::path path_;
};

std::string fmt(double v) { return format_double(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(long v) { return std::to_string(v); }

// NaN and infinities have no JSON spelling.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json config_json(const RunConfig& c) {
    json j;
    j["scenario"] = std::string(to_string(c.scenario));
    j["n_atoms"] = c.lattice.n_atoms;
    j["n_sites"] = c.lattice.n_sites;
    j["n_illuminated"] = c.lattice.n_illuminated;
    j["kappa"] = c.kappa;
    j["coupling_scale"] = c.coupling_scale;
    if (c.scenario == Scenario::Transmission) {
        j["kappa_over_u11"] = c.kappa_over_u11;
        j["z_p"] = c.z_p;
    }
    j["seed"] = c.seed;
    j["max_jump_probability"] = c.max_jump_probability;
    j["max_tau"] = c.max_tau;
    j["min_tau"] = c.min_tau;
    j["residual_mass"] = c.residual_mass;
    return j;
}

json outcome_json(const OutcomeReport& o) {
    return {{"kind", std::string(to_string(o.kind))},
            {"z1", o.z1},
            {"z2", o.z2},
            {"delta_z", o.delta_z},
            {"delta_z_predicted", number(o.delta_z_predicted)},
            {"phase_phi", o.phase_phi},
            {"phase_big_phi", o.phase_big_phi},
            {"component_weights", {o.component_weights.first, o.component_weights.second}}};
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
}

std::string snapshot_label(size_t i) {
    std::string label;
    for (size_t k = i + 1; k > 0; k = (k - 1) / 26) {
        label.insert(label.begin(), static_cast<char>('A' + (k - 1) % 26));
    }
    return label;
}

}  // namespace

CommandOutput cmd_trajectory(const RunConfig& config, const fs::path& out_dir) {
    ensure_dir(out_dir);
    auto setup = config.trajectory_setup();
    RunRecord record = run_trajectory(setup, config.seed);
    CommandOutput out;

    CsvWriter csv(out_dir / "trajectory.csv", {"t[time]", "tau[1]", "m[counts]", "mean_z[atoms]", "width[atoms]",
                                               "cond_photons_reduced[|C|^2]", "mandel_q_reduced[|C|^2]"});
    for (const auto& s : record.samples) {
        csv.row({fmt(s.t), fmt(s.tau), fmt(s.m), fmt(s.mean_z), fmt(s.width), fmt(s.cond_photons_reduced),
                 fmt(s.mandel_q_reduced)});
    }
    out.files.push_back(csv.path());

    if (!record.snapshots.empty()) {
        CsvWriter snap(out_dir / "snapshots.csv", {"label", "t[time]", "tau[1]", "m[counts]", "z[atoms]", "p[1]"});
        for (size_t i = 0; i < record.snapshots.size(); ++i) {
            const auto& s = record.snapshots[i];
            for (size_t k = 0; k < s.dist.size(); ++k) {
                snap.row({snapshot_label(i), fmt(s.t), fmt(s.tau), fmt(s.m), fmt(s.dist.z(k)), fmt(s.dist.p(k))});
            }
        }
        out.files.push_back(snap.path());
    }

    const auto& final_state = record.final_state;
    json summary;
    summary["config"] = config_json(config);
    summary["final"] = {{"t", final_state.t()},
                        {"tau", final_state.tau()},
                        {"m", final_state.m()},
                        {"collapsed", record.collapsed},
                        {"steps", record.steps}};
    if (record.outcome) {
        summary["outcome"] = outcome_json(*record.outcome);
        out.summary = std::string(to_string(record.outcome->kind)) + " z1=" + std::to_string(record.outcome->z1) +
                      " z2=" + std::to_string(record.outcome->z2) + " m=" + std::to_string(final_state.m()) +
                      " tau=" + format_double(final_state.tau());
    } else {
        summary["classification_error"] = *record.classification_error;
        out.summary = "classification failed: " + *record.classification_error;
        out.exit_code = kExitClassification;
    }
    write_json(out_dir / "outcome.json", summary);
    out.files.push_back(out_dir / "outcome.json");
    return out;
}

CommandOutput cmd_ensemble(const RunConfig& config, const fs::path& out_dir) {
    ensure_dir(out_dir);
    auto setup = config.trajectory_setup();
    std::vector<double> taus = config.histogram_taus;
    std::sort(taus.begin(), taus.end());
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
    setup.schedule = {0.0, taus};
    if (!taus.empty()) {
        // Histograms need every trajectory to reach the last histogram time.
        setup.stop.min_tau = std::max(setup.stop.min_tau, taus.back());
        setup.stop.max_tau = std::max(setup.stop.max_tau, taus.back());
    }
    auto records = run_ensemble(setup, config.seed, config.n_traj);
    CommandOutput out;

    CsvWriter outcomes(out_dir / "ensemble_outcomes.csv",
                       {"trajectory", "kind", "z1[atoms]", "z2[atoms]", "delta_z[atoms]", "delta_z_predicted[atoms]",
                        "m[counts]", "tau[1]", "collapsed"});
    int singlets = 0;
    int doublets = 0;
    int unclassified = 0;
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto& fs_ = r.final_state;
        if (r.outcome) {
            (r.outcome->kind == OutcomeKind::Singlet ? singlets : doublets)++;
            outcomes.row({fmt(static_cast<int>(i)), std::string(to_string(r.outcome->kind)), fmt(r.outcome->z1),
                          fmt(r.outcome->z2), fmt(r.outcome->delta_z), fmt(r.outcome->delta_z_predicted),
                          fmt(fs_.m()), fmt(fs_.tau()), r.collapsed ? "1" : "0"});
        } else {
            ++unclassified;
            outcomes.row({fmt(static_cast<int>(i)), "unclassified", "", "", "", "", fmt(fs_.m()), fmt(fs_.tau()),
                          r.collapsed ? "1" : "0"});
        }
    }
    out.files.push_back(outcomes.path());

    json summary;
    summary["config"] = config_json(config);
    summary["n_traj"] = config.n_traj;
    summary["frequencies"] = {{"singlet", singlets}, {"doublet", doublets}, {"unclassified", unclassified}};
    summary["histograms"] = json::array();

    if (!taus.empty()) {
        CsvWriter hist(out_dir / "ensemble_histograms.csv",
                       {"tau[1]", "m[counts]", "observed[trajectories]", "empirical[1]", "closed_form[1]"});
        auto table = amplitude_table(setup.model, setup.initial.z_values());
        const double rate = 2.0 * table.reduced_scale() * setup.model.kappa;
        for (size_t k = 0; k < taus.size(); ++k) {
            std::map<int, long> counts;
            double mean = 0.0;
            for (const auto& r : records) {
                int m = r.snapshots.at(k).m;
                counts[m]++;
                mean += m;
            }
            mean /= static_cast<double>(records.size());
            auto closed = photocount_distribution(setup.initial, table, setup.model.kappa, taus[k] / rate);
            int top = std::max(closed.n_values.back(), counts.rbegin()->first);
            std::vector<long> observed(static_cast<size_t>(top) + 1, 0);
            std::vector<double> expected(observed.size(), 0.0);
            for (auto [m, c] : counts) {
                observed[static_cast<size_t>(m)] = c;
            }
            for (size_t n = 0; n < closed.n_values.size(); ++n) {
                expected[n] = closed.probabilities[n];
            }
            for (size_t m = 0; m < observed.size(); ++m) {
                hist.row({fmt(taus[k]), fmt(static_cast<int>(m)), fmt(observed[m]),
                          fmt(static_cast<double>(observed[m]) / static_cast<double>(records.size())),
                          fmt(expected[m])});
            }
            auto chi = chi_square_gof(observed, expected);
            summary["histograms"].push_back({{"tau", taus[k]},
                                             {"mean_m", mean},
                                             {"closed_form_mean_m", closed.mean()},
                                             {"closed_form_fano", number(closed.fano())},
                                             {"chi_square", chi.statistic},
                                             {"dof", chi.dof},
                                             {"p_value", chi.p_value}});
        }
        out.files.push_back(hist.path());
    }
    write_json(out_dir / "ensemble_summary.json", summary);
    out.files.push_back(out_dir / "ensemble_summary.json");
    out.summary = "singlet " + std::to_string(singlets) + ", doublet " + std::to_string(doublets) + ", unclassified " +
                  std::to_string(unclassified);
    return out;
}

CommandOutput cmd_purity_sweep(const RunConfig& config, const fs::path& out_dir) {
    ensure_dir(out_dir);
    ProbeModel model = config.scenario == Scenario::Transmission
                           ? config.probe_model()
                           : ProbeModel::transmission(config.kappa, config.kappa_over_u11, config.z_p, 1.0);
    std::vector<double> grid(static_cast<size_t>(config.purity_splitting_points));
    for (size_t i = 0; i < grid.size(); ++i) {
        grid[i] = config.purity_splitting_max * static_cast<double>(i) / static_cast<double>(grid.size() - 1);
    }
    auto points = purity_sweep(config.purity_losses, grid, model);
    CsvWriter csv(out_dir / "purity_sweep.csv", {"delta_z[atoms]", "L[counts]", "purity[1]"});
    for (const auto& p : points) {
        csv.row({fmt(p.delta_z), fmt(p.losses), fmt(p.purity)});
    }
    CommandOutput out;
    out.files.push_back(csv.path());
    out.summary = std::to_string(points.size()) + " purity points";
    return out;
}

CommandOutput cmd_oracle_check(const RunConfig& config, const fs::path& out_dir) {
    ensure_dir(out_dir);
    const double kappa = config.kappa;
    ProbeModel model = config.scenario == Scenario::Transmission
                           ? ProbeModel::transmission(kappa, config.kappa_over_u11, 1.5, 0.45)
                           : ProbeModel::transverse(config.scenario, kappa, 0.12);
    OracleScript script{20.0 / kappa, {21.0 / kappa, 22.5 / kappa, 22.6 / kappa, 25.0 / kappa}, 27.0 / kappa};
    CsvWriter csv(out_dir / "oracle_check.csv",
                  {"scenario", "n_atoms", "z[atoms]", "p_oracle[1]", "p_reduced[1]", "abs_diff[1]"});
    double worst = 0.0;
    for (int n : {2, 3, 4}) {
        LatticeSpec lattice{n, 2, config.scenario == Scenario::DiffractionMinimum ? 2 : 1, 1.0, {}};
        auto result = check_equivalence(model, lattice, script);
        worst = std::max(worst, result.max_abs_difference);
        for (size_t i = 0; i < result.oracle.size(); ++i) {
            double reduced = result.reduced.probability_at(result.oracle.z(i));
            csv.row({std::string(to_string(config.scenario)), fmt(n), fmt(result.oracle.z(i)), fmt(result.oracle.p(i)),
                     fmt(reduced), fmt(std::abs(result.oracle.p(i) - reduced))});
        }
    }
    CommandOutput out;
    out.files.push_back(csv.path());
    out.summary = "max |p_oracle - p_reduced| = " + format_double(worst);
    if (worst > 1e-6) {
        out.exit_code = kExitNumericalAbort;
    }
    return out;
}

}  // namespace backaction
