// Command-line surface for the HiFi-BBrg library: dataset synthesis, training,
// sampling, evaluation, ablation sweeps, and schedule inspection.

#include <CLI11.hpp>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "hifibbrg/bridge.hpp"
#include "hifibbrg/data.hpp"
#include "hifibbrg/metrics.hpp"
#include "hifibbrg/sampler.hpp"
#include "hifibbrg/trainer.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace hifibbrg;

namespace {

// usage/config problems exit 2, internal errors exit 1
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void apply_thread_cap() {
    if (const char* env = std::getenv("HIFI_BBRG_NUM_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) {
#ifdef _OPENMP
            omp_set_num_threads(n);
#endif
            cv::setNumThreads(n);
        }
    }
}

void write_resolved_config(const std::string& out_dir,
                           const std::map<std::string, std::string>& kv) {
    std::ofstream out(fs::path(out_dir) / "resolved_config.toml");
    if (!out) throw std::runtime_error("cannot write resolved config in " + out_dir);
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

struct AblationFlags {
    bool condition, reconstruction, adversarial;
};

AblationFlags ablation_flags(const std::string& name) {
    if (name == "bbrg") return {false, false, false};
    if (name == "conditional-bbrg") return {true, false, false};
    if (name == "hifi-bbrg") return {true, true, true};
    throw UsageError("unknown ablation variant: " + name);
}

data::PairedDataset load_dataset_dir(const std::string& dir, int size) {
    fs::path a = fs::path(dir) / "A";
    fs::path b = fs::path(dir) / "B";
    if (!fs::is_directory(a) || !fs::is_directory(b)) {
        throw UsageError("dataset directory " + dir + " must contain A/ and B/ subfolders");
    }
    return data::load_paired_folder(a.string(), b.string(), size);
}

// --- synth-data --------------------------------------------------------------

struct SynthArgs {
    std::string out;
    std::string kind = "blur-deblur";
    int size = 64;
    int n = 200;
    std::uint64_t seed = 0;
    double blur_sigma = 2.0;
    double gamma = 1.0;
    double texture_amp = 0.0;
};

int cmd_synth_data(const SynthArgs& a) {
    data::SyntheticTaskSpec spec;
    spec.kind = data::task_kind_from_string(a.kind);
    spec.size = a.size;
    spec.n_samples = a.n;
    spec.seed = a.seed;
    spec.blur_sigma = a.blur_sigma;
    spec.gamma = a.gamma;
    spec.texture_amp = a.texture_amp;

    data::PairedDataset ds = data::generate_synthetic_pairs(spec);
    fs::create_directories(a.out);
    std::string hash = data::export_png_pairs(ds, a.out);
    write_resolved_config(a.out, {{"command", "\"synth-data\""},
                                  {"kind", "\"" + a.kind + "\""},
                                  {"size", std::to_string(a.size)},
                                  {"n", std::to_string(a.n)},
                                  {"seed", std::to_string(a.seed)},
                                  {"blur_sigma", fmt(a.blur_sigma)},
                                  {"gamma", fmt(a.gamma)},
                                  {"texture_amp", fmt(a.texture_amp)}});
    std::cerr << "wrote " << ds.size() << " pairs to " << a.out << " (hash " << hash << ")\n";
    return 0;
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
    std::string data_dir;
    std::string out;
    std::string resume;
    std::string ablation = "hifi-bbrg";
    std::string norm = "l1";
    int size = 64;
    int width = 16, depth = 2, time_dim = 32;
    train::TrainConfig cfg;
};

int cmd_train(const TrainArgs& a) {
    if (a.resume.empty() && !fs::is_directory(a.data_dir)) {
        throw UsageError("training dataset not found: " + a.data_dir);
    }
    data::PairedDataset ds = load_dataset_dir(a.data_dir, a.size);

    train::TrainConfig cfg = a.cfg;
    AblationFlags flags = ablation_flags(a.ablation);
    cfg.use_condition = flags.condition;
    cfg.use_reconstruction = flags.reconstruction;
    cfg.use_adversarial = flags.adversarial;
    cfg.norm_kind = a.norm == "l2" ? losses::NormKind::L2 : losses::NormKind::L1;

    train::ModelSpec spec;
    spec.backbone.base_width = a.width;
    spec.backbone.depth = a.depth;
    spec.backbone.time_embed_dim = a.time_dim;
    spec.image_channels = ds.channels;

    fs::create_directories(a.out);
    auto resolved = cfg.to_map();
    for (const auto& [k, v] : spec.to_map()) resolved[k] = v;
    resolved["ablation"] = "\"" + a.ablation + "\"";
    resolved["data"] = "\"" + a.data_dir + "\"";
    write_resolved_config(a.out, resolved);

    train::FitResult result;
    if (!a.resume.empty()) {
        train::Trainer tr = train::Trainer::from_checkpoint(a.resume);
        result = tr.fit(ds, a.out);
    } else {
        train::Trainer tr(spec, cfg);
        result = tr.fit(ds, a.out);
    }
    std::cerr << "trained " << result.epochs_run << " epochs, " << result.history.size()
              << " steps; checkpoints: " << result.checkpoint_paths.size() << "\n";
    return 0;
}

// --- sample ------------------------------------------------------------------

struct SampleArgs {
    std::string checkpoint;
    std::string input;  // dataset dir (uses A/) or plain folder of PNGs
    std::string out;
    int steps = 1;
    int trials = 1;
    bool stochastic = false;
    std::uint64_t seed = 0;
    int size = 64;
};

void write_heatmap(const std::string& path, const Tensor& map) {
    double mx = map.max();
    Tensor img = map;
    for (double& v : img.data) v = mx > 0.0 ? (v / mx) * 2.0 - 1.0 : -1.0;
    data::write_png(path, img);
}

int cmd_sample(const SampleArgs& a) {
    train::Trainer tr = train::Trainer::from_checkpoint(a.checkpoint);
    bridge::ScheduleParams sched(tr.config().total_steps);

    std::string in_dir = a.input;
    if (fs::is_directory(fs::path(a.input) / "A")) in_dir = (fs::path(a.input) / "A").string();
    if (!fs::is_directory(in_dir)) throw UsageError("input folder not found: " + a.input);

    data::PairedDataset inputs = data::load_paired_folder(in_dir, in_dir, a.size);
    fs::create_directories(a.out);
    write_resolved_config(a.out, {{"command", "\"sample\""},
                                  {"checkpoint", "\"" + a.checkpoint + "\""},
                                  {"steps", std::to_string(a.steps)},
                                  {"trials", std::to_string(a.trials)},
                                  {"stochastic", a.stochastic ? "true" : "false"},
                                  {"seed", std::to_string(a.seed)}});

    std::ofstream per_step(fs::path(a.out) / "std_per_step.csv");
    per_step << "image,step,mean_std\n";
    per_step.precision(10);

    for (std::size_t i = 0; i < inputs.size(); ++i) {
        sample::SampleRequest req{inputs.source[i], a.steps, a.stochastic, a.trials, a.seed};
        auto [out_img, record] = sample::sample_multi_step(req, *tr.bundle().epsilon_net, sched);
        char name[32];
        std::snprintf(name, sizeof(name), "%06zu", i);
        data::write_png((fs::path(a.out) / (std::string(name) + ".png")).string(), out_img);
        data::write_raw((fs::path(a.out) / (std::string(name) + ".raw")).string(), out_img);
        if (a.trials >= 2) {
            fs::create_directories(fs::path(a.out) / "std");
            write_heatmap((fs::path(a.out) / "std" / (std::string(name) + ".png")).string(),
                          record.final_std_map);
            for (const auto& [step, map] : record.std_maps) {
                per_step << name << "," << step << "," << map.mean() << "\n";
            }
        }
    }
    return 0;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
    std::string pred, ref, out;
    std::string model = "hifi-bbrg";
    int steps = 1;
    double std_dev = 0.0;
    std::uint64_t seed = 0;
    int size = 64;
};

int cmd_eval(const EvalArgs& a) {
    data::PairedDataset pairs = data::load_paired_folder(a.pred, a.ref, a.size);
    if (pairs.size() == 0) throw UsageError("eval: empty prediction/reference set");

    double mean_psnr = 0.0, mean_ssim = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        mean_psnr += metrics::psnr(pairs.source[i], pairs.target[i]);
        mean_ssim += metrics::ssim(pairs.source[i], pairs.target[i]);
    }
    mean_psnr /= static_cast<double>(pairs.size());
    mean_ssim /= static_cast<double>(pairs.size());

    metrics::MetricReport report;
    report.dataset_id = a.ref;
    report.seed = a.seed;
    report.rows.push_back({a.model, a.steps, std::nullopt, mean_psnr, mean_ssim, a.std_dev});

    fs::create_directories(a.out);
    metrics::emit_report_csv(report, (fs::path(a.out) / "report.csv").string());
    metrics::emit_report_json(report, (fs::path(a.out) / "report.json").string());
    write_resolved_config(a.out, {{"command", "\"eval\""},
                                  {"pred", "\"" + a.pred + "\""},
                                  {"ref", "\"" + a.ref + "\""},
                                  {"model", "\"" + a.model + "\""},
                                  {"steps", std::to_string(a.steps)}});
    std::cerr << "psnr " << mean_psnr << " ssim " << mean_ssim << "\n";
    return 0;
}

// --- ablate ------------------------------------------------------------------

struct AblateArgs {
    std::string data_dir;
    std::string out;
    int size = 32;
    int width = 8, depth = 2, time_dim = 16;
    int epochs = 3;
    int batch = 8;
    int trials = 3;
    double lambda = 1.0;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    std::vector<int> sampling_steps = {1000, 200, 1};
    std::vector<int> training_steps = {1, 200, 1000};
};

metrics::MetricRow evaluate_variant(const AblateArgs& a, const data::PairedDataset& train_set,
                                    const data::PairedDataset& test_set,
                                    const std::string& variant, int T, int steps) {
    AblationFlags flags = ablation_flags(variant);
    train::TrainConfig cfg;
    cfg.total_steps = T;
    cfg.lambda_fidelity = a.lambda;
    cfg.lr_epsilon = cfg.lr_generator = a.lr;
    cfg.lr_discriminator = a.lr;
    cfg.batch_size = a.batch;
    cfg.epochs = a.epochs;
    cfg.seed = a.seed;
    cfg.use_condition = flags.condition;
    cfg.use_reconstruction = flags.reconstruction;
    cfg.use_adversarial = flags.adversarial;

    train::ModelSpec spec;
    spec.backbone.base_width = a.width;
    spec.backbone.depth = a.depth;
    spec.backbone.time_embed_dim = a.time_dim;
    spec.image_channels = train_set.channels;

    train::Trainer tr(spec, cfg);
    tr.fit(train_set);

    bridge::ScheduleParams sched(T);
    int n_steps = std::min(steps, T);
    double mean_psnr = 0.0, mean_ssim = 0.0, mean_std = 0.0;
    for (std::size_t i = 0; i < test_set.size(); ++i) {
        sample::SampleRequest req{test_set.source[i], n_steps, n_steps > 1, a.trials, a.seed + i};
        auto [out, record] = sample::sample_multi_step(req, *tr.bundle().epsilon_net, sched);
        mean_psnr += metrics::psnr(out, test_set.target[i]);
        mean_ssim += metrics::ssim(out, test_set.target[i]);
        mean_std += record.mean_std;
    }
    double n = static_cast<double>(test_set.size());
    std::cerr << "ablate row " << variant << " T=" << T << " steps=" << steps
              << " seed=" << a.seed << " psnr=" << mean_psnr / n << "\n";
    return {variant, steps, std::nullopt, mean_psnr / n, mean_ssim / n, mean_std / n};
}

int cmd_ablate(const AblateArgs& a) {
    if (!fs::is_directory(a.data_dir)) throw UsageError("dataset not found: " + a.data_dir);
    data::PairedDataset all = load_dataset_dir(a.data_dir, a.size);
    data::SplitResult splits = data::split(all, 0.8, 0.0, 0.2, a.seed);
    fs::create_directories(a.out);

    int t_max = a.training_steps.empty() ? 1000 : a.training_steps.back();

    // Table-1-style grid: both reduced variants at the largest step count,
    // the full model across the sampling-steps axis.
    metrics::MetricReport components;
    components.dataset_id = a.data_dir;
    components.seed = a.seed;
    components.rows.push_back(evaluate_variant(a, splits.train, splits.test, "bbrg", t_max,
                                               a.sampling_steps.front()));
    components.rows.push_back(evaluate_variant(a, splits.train, splits.test, "conditional-bbrg",
                                               t_max, a.sampling_steps.front()));
    for (int steps : a.sampling_steps) {
        components.rows.push_back(
            evaluate_variant(a, splits.train, splits.test, "hifi-bbrg", t_max, steps));
    }
    metrics::emit_report_csv(components, (fs::path(a.out) / "components_report.csv").string());
    metrics::emit_report_json(components, (fs::path(a.out) / "components_report.json").string());

    // Table-2-style grid: training-T axis, one-step sampling
    metrics::MetricReport tsteps;
    tsteps.dataset_id = a.data_dir;
    tsteps.seed = a.seed;
    for (int T : a.training_steps) {
        metrics::MetricRow row =
            evaluate_variant(a, splits.train, splits.test, "hifi-bbrg", T, 1);
        row.variant = "hifi-bbrg-T" + std::to_string(T);
        tsteps.rows.push_back(row);
    }
    metrics::emit_report_csv(tsteps, (fs::path(a.out) / "training_steps_report.csv").string());
    metrics::emit_report_json(tsteps, (fs::path(a.out) / "training_steps_report.json").string());

    write_resolved_config(a.out, {{"command", "\"ablate\""},
                                  {"data", "\"" + a.data_dir + "\""},
                                  {"epochs", std::to_string(a.epochs)},
                                  {"seed", std::to_string(a.seed)},
                                  {"lambda", fmt(a.lambda)}});
    return 0;
}

// --- inspect-schedule --------------------------------------------------------

int cmd_inspect_schedule(const std::string& out_dir, bool plot) {
    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "schedule.csv");
    if (!csv) throw std::runtime_error("cannot write schedule.csv in " + out_dir);
    csv << "s,B\n";
    csv.precision(12);
    for (int i = 0; i <= 1000; ++i) {
        double s = static_cast<double>(i) / 1000.0;
        csv << s << "," << bridge::noise_scale(s) << "\n";
    }
    if (plot) {
        int w = 640, h = 480;
        cv::Mat img(h, w, CV_8UC3, cv::Scalar(255, 255, 255));
        double b_max = 0.9;
        cv::Point prev;
        for (int i = 0; i <= 1000; ++i) {
            double s = static_cast<double>(i) / 1000.0;
            double b = bridge::noise_scale(s);
            cv::Point p(static_cast<int>(s * (w - 40)) + 20,
                        h - 20 - static_cast<int>(b / b_max * (h - 40)));
            if (i > 0) cv::line(img, prev, p, cv::Scalar(160, 60, 20), 2);
            prev = p;
        }
        cv::imwrite((fs::path(out_dir) / "schedule.png").string(), img);
    }
    write_resolved_config(out_dir, {{"command", "\"inspect-schedule\""}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_cap();

    CLI::App app{"HiFi-BBrg: deterministic Brownian-bridge image translation"};
    app.require_subcommand(1);
    app.set_config("--config")->configurable(false);

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth-data", "Generate a synthetic paired dataset");
    c_synth->add_option("--out", synth.out, "Output directory")->required();
    c_synth->add_option("--kind", synth.kind, "blur-deblur|edge-to-fill|bias-field");
    c_synth->add_option("--size", synth.size, "Image size");
    c_synth->add_option("--n", synth.n, "Number of pairs");
    c_synth->add_option("--seed", synth.seed, "RNG seed");
    c_synth->add_option("--blur-sigma", synth.blur_sigma, "Blur sigma (blur-deblur)");
    c_synth->add_option("--gamma", synth.gamma, "Contrast warp exponent");
    c_synth->add_option("--texture-amp", synth.texture_amp,
                        "Fine-grain texture strength on clean targets");

    TrainArgs targs;
    auto* c_train = app.add_subcommand("train", "Train a model variant");
    c_train->add_option("--data", targs.data_dir, "Dataset dir with A/ and B/")->required();
    c_train->add_option("--out", targs.out, "Output directory")->required();
    c_train->add_option("--resume", targs.resume, "Resume from checkpoint");
    c_train->add_option("--ablation", targs.ablation, "bbrg|conditional-bbrg|hifi-bbrg");
    c_train->add_option("--norm", targs.norm, "l1|l2");
    c_train->add_option("--size", targs.size, "Image size");
    c_train->add_option("--width", targs.width, "Backbone base width");
    c_train->add_option("--depth", targs.depth, "Backbone depth");
    c_train->add_option("--time-dim", targs.time_dim, "Time embedding dim");
    c_train->add_option("--T", targs.cfg.total_steps, "Training time steps");
    c_train->add_option("--lambda", targs.cfg.lambda_fidelity, "Fidelity loss weight");
    c_train->add_option("--lr-eps", targs.cfg.lr_epsilon, "Bridge predictor learning rate");
    c_train->add_option("--lr-gen", targs.cfg.lr_generator, "Generator learning rate");
    c_train->add_option("--lr-disc", targs.cfg.lr_discriminator, "Discriminator learning rate");
    c_train->add_option("--lr-decay", targs.cfg.lr_decay,
                        "Per-epoch multiplicative learning-rate decay");
    c_train->add_option("--batch", targs.cfg.batch_size, "Batch size");
    c_train->add_option("--epochs", targs.cfg.epochs, "Epoch budget");
    c_train->add_option("--seed", targs.cfg.seed, "RNG seed");
    c_train->add_option("--checkpoint-every", targs.cfg.checkpoint_every,
                        "Epochs between periodic checkpoints");

    SampleArgs sargs;
    auto* c_sample = app.add_subcommand("sample", "Translate images with a trained model");
    c_sample->add_option("--checkpoint", sargs.checkpoint, "Checkpoint file")->required();
    c_sample->add_option("--input", sargs.input, "Input folder (or dataset dir)")->required();
    c_sample->add_option("--out", sargs.out, "Output directory")->required();
    c_sample->add_option("--steps", sargs.steps, "Sampling steps (default 1)");
    c_sample->add_option("--trials", sargs.trials, "Repeated trials for std maps");
    c_sample->add_flag("--stochastic", sargs.stochastic, "Inject bridge noise between steps");
    c_sample->add_option("--seed", sargs.seed, "RNG seed");
    c_sample->add_option("--size", sargs.size, "Image size");

    EvalArgs eargs;
    auto* c_eval = app.add_subcommand("eval", "Score predictions against references");
    c_eval->add_option("--pred", eargs.pred, "Prediction folder")->required();
    c_eval->add_option("--ref", eargs.ref, "Reference folder")->required();
    c_eval->add_option("--out", eargs.out, "Output directory")->required();
    c_eval->add_option("--model", eargs.model, "Row label");
    c_eval->add_option("--steps", eargs.steps, "Row sampling steps");
    c_eval->add_option("--std", eargs.std_dev, "Determinism std for the row");
    c_eval->add_option("--size", eargs.size, "Image size");

    AblateArgs aargs;
    auto* c_ablate = app.add_subcommand("ablate", "Run the component/step ablation grids");
    c_ablate->add_option("--data", aargs.data_dir, "Dataset dir with A/ and B/")->required();
    c_ablate->add_option("--out", aargs.out, "Output directory")->required();
    c_ablate->add_option("--size", aargs.size, "Image size");
    c_ablate->add_option("--width", aargs.width, "Backbone base width");
    c_ablate->add_option("--depth", aargs.depth, "Backbone depth");
    c_ablate->add_option("--epochs", aargs.epochs, "Epochs per row");
    c_ablate->add_option("--batch", aargs.batch, "Batch size");
    c_ablate->add_option("--trials", aargs.trials, "Sampling trials per row");
    c_ablate->add_option("--lambda", aargs.lambda, "Fidelity loss weight");
    c_ablate->add_option("--lr", aargs.lr, "Learning rate for all nets");
    c_ablate->add_option("--seed", aargs.seed, "RNG seed");
    c_ablate->add_option("--sampling-steps", aargs.sampling_steps, "Sampling-step grid");
    c_ablate->add_option("--training-steps", aargs.training_steps, "Training-T grid");

    std::string sched_out = ".";
    bool sched_plot = false;
    auto* c_sched = app.add_subcommand("inspect-schedule", "Dump the B(s) noise schedule");
    c_sched->add_option("--out", sched_out, "Output directory");
    c_sched->add_flag("--png", sched_plot, "Also render a line plot");

    try {
        app.parse(argc, argv);
        if (*c_synth) return cmd_synth_data(synth);
        if (*c_train) return cmd_train(targs);
        if (*c_sample) return cmd_sample(sargs);
        if (*c_eval) return cmd_eval(eargs);
        if (*c_ablate) return cmd_ablate(aargs);
        if (*c_sched) return cmd_inspect_schedule(sched_out, sched_plot);
        return 2;
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
