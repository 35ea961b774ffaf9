#include "hifibbrg/trainer.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace hifibbrg::train {

// --- config (de)serialization -------------------------------------------------

void TrainConfig::validate() const {
    if (total_steps < 1) throw std::invalid_argument("TrainConfig: total_steps must be >= 1");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (lr_epsilon <= 0 || lr_generator <= 0 || lr_discriminator <= 0) {
        throw std::invalid_argument("TrainConfig: learning rates must be > 0");
    }
    if (lambda_fidelity < 0) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
    if (lr_decay <= 0 || lr_decay > 1.0) {
        throw std::invalid_argument("TrainConfig: lr_decay must be in (0, 1]");
    }
    if (!use_reconstruction && use_adversarial) {
        throw std::invalid_argument(
            "TrainConfig: adversarial training requires the reconstruction mapping");
    }
}

static std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::map<std::string, std::string> TrainConfig::to_map() const {
    return {
        {"total_steps", std::to_string(total_steps)},
        {"lambda_fidelity", fmt_double(lambda_fidelity)},
        {"lr_epsilon", fmt_double(lr_epsilon)},
        {"lr_generator", fmt_double(lr_generator)},
        {"lr_discriminator", fmt_double(lr_discriminator)},
        {"batch_size", std::to_string(batch_size)},
        {"epochs", std::to_string(epochs)},
        {"seed", std::to_string(seed)},
        {"use_condition", use_condition ? "1" : "0"},
        {"use_reconstruction", use_reconstruction ? "1" : "0"},
        {"use_adversarial", use_adversarial ? "1" : "0"},
        {"norm_kind", norm_kind == losses::NormKind::L1 ? "L1" : "L2"},
        {"lr_decay", fmt_double(lr_decay)},
        {"per_sample_t", per_sample_t ? "1" : "0"},
        {"checkpoint_every", std::to_string(checkpoint_every)},
        {"early_stop_patience", std::to_string(early_stop_patience)},
    };
}

static const std::string& get(const std::map<std::string, std::string>& m, const std::string& k) {
    auto it = m.find(k);
    if (it == m.end()) throw std::runtime_error("config map: missing key " + k);
    return it->second;
}

TrainConfig TrainConfig::from_map(const std::map<std::string, std::string>& m) {
    TrainConfig c;
    c.total_steps = std::stoi(get(m, "total_steps"));
    c.lambda_fidelity = std::stod(get(m, "lambda_fidelity"));
    c.lr_epsilon = std::stod(get(m, "lr_epsilon"));
    c.lr_generator = std::stod(get(m, "lr_generator"));
    c.lr_discriminator = std::stod(get(m, "lr_discriminator"));
    c.batch_size = std::stoi(get(m, "batch_size"));
    c.epochs = std::stoi(get(m, "epochs"));
    c.seed = std::stoull(get(m, "seed"));
    c.use_condition = get(m, "use_condition") == "1";
    c.use_reconstruction = get(m, "use_reconstruction") == "1";
    c.use_adversarial = get(m, "use_adversarial") == "1";
    c.norm_kind = get(m, "norm_kind") == "L2" ? losses::NormKind::L2 : losses::NormKind::L1;
    c.lr_decay = std::stod(get(m, "lr_decay"));
    c.per_sample_t = get(m, "per_sample_t") == "1";
    c.checkpoint_every = std::stoi(get(m, "checkpoint_every"));
    c.early_stop_patience = std::stoi(get(m, "early_stop_patience"));
    return c;
}

std::map<std::string, std::string> ModelSpec::to_map() const {
    return {
        {"net.base_width", std::to_string(backbone.base_width)},
        {"net.depth", std::to_string(backbone.depth)},
        {"net.time_embed_dim", std::to_string(backbone.time_embed_dim)},
        {"image_channels", std::to_string(image_channels)},
        {"affine_toy", affine_toy ? "1" : "0"},
    };
}

ModelSpec ModelSpec::from_map(const std::map<std::string, std::string>& m) {
    ModelSpec s;
    s.backbone.base_width = std::stoi(get(m, "net.base_width"));
    s.backbone.depth = std::stoi(get(m, "net.depth"));
    s.backbone.time_embed_dim = std::stoi(get(m, "net.time_embed_dim"));
    s.image_channels = std::stoi(get(m, "image_channels"));
    s.affine_toy = get(m, "affine_toy") == "1";
    return s;
}

// --- Adam --------------------------------------------------------------------

Adam::Adam(double lr) : lr_(lr) {}

void Adam::step(nn::ParamStore& params) {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (auto& p : params.items()) {
        Slot& slot = slots_[p.name];
        Tensor& val = p.var->value;
        const Tensor& g = p.var->grad_ref();
        if (slot.m.data.empty()) {
            slot.m = Tensor{val.shape};
            slot.v = Tensor{val.shape};
        }
        for (std::size_t i = 0; i < val.size(); ++i) {
            slot.m[i] = beta1_ * slot.m[i] + (1.0 - beta1_) * g[i];
            slot.v[i] = beta2_ * slot.v[i] + (1.0 - beta2_) * g[i] * g[i];
            double mhat = slot.m[i] / bc1;
            double vhat = slot.v[i] / bc2;
            val[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

// --- trainer -----------------------------------------------------------------

static models::ModelBundle build_bundle(const ModelSpec& spec, const TrainConfig& cfg) {
    if (spec.affine_toy) {
        models::ModelBundle b;
        Rng rng(cfg.seed);
        b.epsilon_net = std::make_shared<models::AffineEpsilon>(rng);
        b.epsilon_param_count = b.epsilon_net->params().total_count();
        return b;
    }
    return models::build_models(spec.backbone, spec.image_channels, cfg.use_condition,
                                cfg.use_reconstruction, cfg.use_adversarial, cfg.seed);
}

Trainer::Trainer(const ModelSpec& spec, const TrainConfig& cfg)
    : spec_(spec),
      cfg_(cfg),
      bundle_((cfg.validate(), build_bundle(spec, cfg))),
      opt_eps_(cfg.lr_epsilon),
      opt_gen_(cfg.lr_generator),
      opt_disc_(cfg.lr_discriminator),
      rng_(cfg.seed ^ 0x7261696E65727Aull) {}

losses::LossRecord Trainer::train_step(const Tensor& x_T, const Tensor& x_0) {
    if (!(x_T.shape == x_0.shape)) {
        throw std::invalid_argument("train_step: batch shape mismatch " + x_T.shape.str() +
                                    " vs " + x_0.shape.str());
    }
    if (cfg_.per_sample_t && x_T.shape.n > 1) {
        // one forward per sample so each can carry its own time embedding
        losses::LossRecord acc;
        int n = x_T.shape.n;
        std::size_t plane = x_T.size() / n;
        for (int k = 0; k < n; ++k) {
            Shape s1{1, x_T.shape.c, x_T.shape.h, x_T.shape.w};
            Tensor xt1{s1}, x01{s1};
            std::copy_n(&x_T.data[k * plane], plane, xt1.data.data());
            std::copy_n(&x_0.data[k * plane], plane, x01.data.data());
            int t = rng_.uniform_int(1, cfg_.total_steps);
            Tensor eps = rng_.normal_tensor(s1);
            losses::LossRecord r = step_with_t(xt1, x01, t, eps);
            acc.l_diff += r.l_diff / n;
            acc.l_fidelity += r.l_fidelity / n;
            acc.l_adv_d += r.l_adv_d / n;
            acc.l_adv_g += r.l_adv_g / n;
            acc.l_total_gen += r.l_total_gen / n;
        }
        return acc;
    }
    int t = rng_.uniform_int(1, cfg_.total_steps);
    Tensor eps = rng_.normal_tensor(x_T.shape);
    return step_with_t(x_T, x_0, t, eps);
}

losses::LossRecord Trainer::step_with_t(const Tensor& x_T, const Tensor& x_0, int t,
                                        const Tensor& eps) {
    bridge::ScheduleParams sched(cfg_.total_steps);
    Tensor x_t = bridge::forward_sample(x_0, x_T, t, eps, sched);

    auto check = [](double v, const char* term) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(std::string("train_step: non-finite ") + term);
        }
        return v;
    };

    ag::Var x_t_c = ag::constant(x_t);
    ag::Var x_T_c = ag::constant(x_T);

    ag::Var pred = bundle_.epsilon_net->forward(x_t_c, x_T_c, t, cfg_.total_steps);
    ag::Var l_diff = losses::diffusion_loss(pred, x_t, x_0, cfg_.norm_kind);
    ag::Var x0_hat = ag::sub(x_t_c, pred);

    losses::LossRecord rec;
    rec.l_diff = check(l_diff->value.item(), "diffusion loss");

    ag::Var l_fid, l_adv_g;
    ag::Var xT_hat;
    if (cfg_.use_reconstruction) {
        xT_hat = bundle_.generator->forward(x0_hat);
        l_fid = losses::fidelity_loss(x_T, xT_hat, cfg_.norm_kind);
        rec.l_fidelity = check(l_fid->value.item(), "fidelity loss");
    } else {
        l_fid = ag::constant(Tensor::scalar(0.0));
    }

    if (cfg_.use_adversarial) {
        // discriminator step on detached fakes
        ag::Var d_f = bundle_.discriminator->forward(ag::detach(xT_hat));
        ag::Var d_r = bundle_.discriminator->forward(x_T_c);
        ag::Var l_d = losses::discriminator_loss(d_f, d_r);
        rec.l_adv_d = check(l_d->value.item(), "discriminator loss");
        bundle_.discriminator->params().zero_grad();
        ag::backward(l_d);
        opt_disc_.step(bundle_.discriminator->params());

        // generator-side term against the updated discriminator
        ag::Var d_f2 = bundle_.discriminator->forward(xT_hat);
        l_adv_g = losses::generator_adversarial_loss(d_f2);
        rec.l_adv_g = check(l_adv_g->value.item(), "generator adversarial loss");
    } else {
        l_adv_g = ag::constant(Tensor::scalar(0.0));
    }

    double lambda = cfg_.use_reconstruction ? cfg_.lambda_fidelity : 0.0;
    ag::Var total = losses::total_generator_loss(l_diff, l_fid, l_adv_g, lambda);
    rec.l_total_gen = check(total->value.item(), "total generator loss");

    bundle_.epsilon_net->params().zero_grad();
    if (bundle_.generator) bundle_.generator->params().zero_grad();
    ag::backward(total);
    opt_eps_.step(bundle_.epsilon_net->params());
    if (cfg_.use_reconstruction) opt_gen_.step(bundle_.generator->params());
    // the generator-side backward also reached D's parameters; drop those grads
    if (bundle_.discriminator) bundle_.discriminator->params().zero_grad();

    return rec;
}

double Trainer::validation_psnr(const data::PairedDataset& val) {
    double acc = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) {
        ag::Var x_T = ag::constant(val.source[i]);
        ag::Var pred = bundle_.epsilon_net->forward(x_T, x_T, cfg_.total_steps, cfg_.total_steps);
        Tensor out = val.source[i] - pred->value;
        double mse = 0.0;
        for (std::size_t k = 0; k < out.size(); ++k) {
            double d = out[k] - val.target[i][k];
            mse += d * d;
        }
        mse /= static_cast<double>(out.size());
        acc += mse <= 0.0 ? 100.0 : std::min(100.0, 10.0 * std::log10(4.0 / mse));
    }
    return acc / static_cast<double>(val.size());
}

FitResult Trainer::fit(const data::PairedDataset& ds, const std::string& out_dir,
                       const data::PairedDataset* validation) {
    if (ds.size() == 0) throw std::invalid_argument("fit: empty dataset");
    if (!out_dir.empty()) fs::create_directories(out_dir);

    FitResult result;
    double best_val = -1e300;
    int since_best = 0;

    for (int epoch = next_epoch_; epoch < cfg_.epochs; ++epoch) {
        // lr recomputed from the epoch index so resumed runs match exactly
        double decay = std::pow(cfg_.lr_decay, epoch);
        opt_eps_.set_lr(cfg_.lr_epsilon * decay);
        opt_gen_.set_lr(cfg_.lr_generator * decay);
        opt_disc_.set_lr(cfg_.lr_discriminator * decay);
        // stateless per-epoch order so resumed runs see identical batches
        Rng order_rng(cfg_.seed ^ (0xB5297A4D3F84D5B5ull + static_cast<std::uint64_t>(epoch)));
        std::vector<std::size_t> order = order_rng.permutation(ds.size());
        for (std::size_t pos = 0; pos < order.size(); pos += cfg_.batch_size) {
            std::size_t end = std::min(order.size(), pos + cfg_.batch_size);
            std::vector<std::size_t> idx(order.begin() + pos, order.begin() + end);
            auto [x_T, x_0] = ds.batch(idx);
            history_.push_back(train_step(x_T, x_0));
        }
        next_epoch_ = epoch + 1;
        ++result.epochs_run;

        if (!out_dir.empty() && cfg_.checkpoint_every > 0 &&
            (epoch + 1) % cfg_.checkpoint_every == 0 && epoch + 1 < cfg_.epochs) {
            char name[32];
            std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", epoch + 1);
            std::string path = (fs::path(out_dir) / name).string();
            save(path);
            result.checkpoint_paths.push_back(path);
        }
        if (validation && cfg_.early_stop_patience > 0 && validation->size() > 0) {
            double v = validation_psnr(*validation);
            if (v > best_val + 1e-6) {
                best_val = v;
                since_best = 0;
            } else if (++since_best >= cfg_.early_stop_patience) {
                break;
            }
        }
    }

    if (!out_dir.empty()) {
        std::string final_path = (fs::path(out_dir) / "final.ckpt").string();
        save(final_path);
        result.checkpoint_paths.push_back(final_path);
        write_history_csv((fs::path(out_dir) / "history.csv").string(), history_);
    }
    result.history = history_;
    return result;
}

void write_history_csv(const std::string& path, const std::vector<losses::LossRecord>& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_history_csv: cannot open " + path);
    out << "step,l_diff,l_fidelity,l_adv_d,l_adv_g,l_total_gen\n";
    out.precision(12);
    for (std::size_t i = 0; i < history.size(); ++i) {
        const auto& r = history[i];
        out << i << "," << r.l_diff << "," << r.l_fidelity << "," << r.l_adv_d << ","
            << r.l_adv_g << "," << r.l_total_gen << "\n";
    }
}

// --- checkpoint container ----------------------------------------------------

namespace {

void put_u32(std::string& buf, std::uint32_t v) { buf.append(reinterpret_cast<char*>(&v), 4); }
void put_i64(std::string& buf, std::int64_t v) { buf.append(reinterpret_cast<char*>(&v), 8); }
void put_str(std::string& buf, const std::string& s) {
    put_u32(buf, static_cast<std::uint32_t>(s.size()));
    buf.append(s);
}
void put_tensor(std::string& buf, const Tensor& t) {
    put_u32(buf, static_cast<std::uint32_t>(t.shape.n));
    put_u32(buf, static_cast<std::uint32_t>(t.shape.c));
    put_u32(buf, static_cast<std::uint32_t>(t.shape.h));
    put_u32(buf, static_cast<std::uint32_t>(t.shape.w));
    buf.append(reinterpret_cast<const char*>(t.data.data()), t.size() * sizeof(double));
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) {
        if (pos + n > buf.size()) throw std::runtime_error("checkpoint: truncated payload");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, buf.data() + pos, 4);
        pos += 4;
        return v;
    }
    std::int64_t i64() {
        need(8);
        std::int64_t v;
        std::memcpy(&v, buf.data() + pos, 8);
        pos += 8;
        return v;
    }
    std::string str() {
        std::uint32_t n = u32();
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
    Tensor tensor() {
        int n = static_cast<int>(u32()), c = static_cast<int>(u32());
        int h = static_cast<int>(u32()), w = static_cast<int>(u32());
        Tensor t{Shape{n, c, h, w}};
        need(t.size() * sizeof(double));
        std::memcpy(t.data.data(), buf.data() + pos, t.size() * sizeof(double));
        pos += t.size() * sizeof(double);
        return t;
    }
};

void put_opt(std::string& buf, const Checkpoint::OptBlob& o) {
    put_i64(buf, o.t);
    put_u32(buf, static_cast<std::uint32_t>(o.slots.size()));
    for (const auto& [name, slot] : o.slots) {
        put_str(buf, name);
        put_tensor(buf, slot.m);
        put_tensor(buf, slot.v);
    }
}

Checkpoint::OptBlob read_opt(Reader& r) {
    Checkpoint::OptBlob o;
    o.t = r.i64();
    std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string name = r.str();
        Adam::Slot slot;
        slot.m = r.tensor();
        slot.v = r.tensor();
        o.slots.emplace_back(std::move(name), std::move(slot));
    }
    return o;
}

constexpr char kCkptMagic[8] = {'H', 'B', 'R', 'G', 'C', 'K', 'P', 'T'};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::string payload;
    put_u32(payload, static_cast<std::uint32_t>(ckpt.config.size()));
    for (const auto& [k, v] : ckpt.config) {
        put_str(payload, k);
        put_str(payload, v);
    }
    put_u32(payload, static_cast<std::uint32_t>(ckpt.next_epoch));
    put_u32(payload, static_cast<std::uint32_t>(ckpt.params.size()));
    for (const auto& [name, t] : ckpt.params) {
        put_str(payload, name);
        put_tensor(payload, t);
    }
    put_opt(payload, ckpt.opt_eps);
    put_opt(payload, ckpt.opt_gen);
    put_opt(payload, ckpt.opt_disc);
    put_str(payload, ckpt.rng_state);
    put_u32(payload, static_cast<std::uint32_t>(ckpt.history.size()));
    for (const auto& h : ckpt.history) {
        for (double v : {h.l_diff, h.l_fidelity, h.l_adv_d, h.l_adv_g, h.l_total_gen}) {
            payload.append(reinterpret_cast<const char*>(&v), sizeof(double));
        }
    }

    std::uint32_t crc = static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(payload.data()), payload.size()));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out.write(kCkptMagic, 8);
    std::uint32_t version = Checkpoint::kVersion;
    out.write(reinterpret_cast<const char*>(&version), 4);
    std::uint64_t len = payload.size();
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(payload.data(), payload.size());
    out.write(reinterpret_cast<const char*>(&crc), 4);
    if (!out) throw std::runtime_error("save_checkpoint: write failure on " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCkptMagic, 8) != 0) {
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    }
    std::uint32_t version;
    in.read(reinterpret_cast<char*>(&version), 4);
    if (!in || version != Checkpoint::kVersion) {
        throw std::runtime_error("load_checkpoint: format version " + std::to_string(version) +
                                 " unsupported (expected " + std::to_string(Checkpoint::kVersion) +
                                 ")");
    }
    std::uint64_t len;
    in.read(reinterpret_cast<char*>(&len), 8);
    if (!in) throw std::runtime_error("load_checkpoint: truncated header in " + path);
    std::string payload(len, '\0');
    in.read(payload.data(), static_cast<std::streamsize>(len));
    std::uint32_t crc_stored;
    in.read(reinterpret_cast<char*>(&crc_stored), 4);
    if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path);
    std::uint32_t crc = static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(payload.data()), payload.size()));
    if (crc != crc_stored) throw std::runtime_error("load_checkpoint: checksum mismatch in " + path);

    Reader r{payload};
    Checkpoint ckpt;
    std::uint32_t n_cfg = r.u32();
    for (std::uint32_t i = 0; i < n_cfg; ++i) {
        std::string k = r.str();
        ckpt.config[k] = r.str();
    }
    ckpt.next_epoch = static_cast<int>(r.u32());
    std::uint32_t n_params = r.u32();
    for (std::uint32_t i = 0; i < n_params; ++i) {
        std::string name = r.str();
        ckpt.params.emplace_back(std::move(name), r.tensor());
    }
    ckpt.opt_eps = read_opt(r);
    ckpt.opt_gen = read_opt(r);
    ckpt.opt_disc = read_opt(r);
    ckpt.rng_state = r.str();
    std::uint32_t n_hist = r.u32();
    for (std::uint32_t i = 0; i < n_hist; ++i) {
        losses::LossRecord h;
        for (double* v : {&h.l_diff, &h.l_fidelity, &h.l_adv_d, &h.l_adv_g, &h.l_total_gen}) {
            r.need(sizeof(double));
            std::memcpy(v, payload.data() + r.pos, sizeof(double));
            r.pos += sizeof(double);
        }
        ckpt.history.push_back(h);
    }
    return ckpt;
}

// --- trainer <-> checkpoint --------------------------------------------------

void Trainer::save(const std::string& path) const {
    Checkpoint ckpt;
    ckpt.config = cfg_.to_map();
    for (const auto& [k, v] : spec_.to_map()) ckpt.config[k] = v;
    ckpt.next_epoch = next_epoch_;

    auto dump_params = [&](const char* prefix, const nn::ParamStore& store) {
        for (const auto& p : store.items()) {
            ckpt.params.emplace_back(std::string(prefix) + "/" + p.name, p.var->value);
        }
    };
    auto dump_opt = [&](const Adam& opt) {
        Checkpoint::OptBlob o;
        o.t = const_cast<Adam&>(opt).step_count();
        for (const auto& [name, slot] : const_cast<Adam&>(opt).slots()) {
            o.slots.emplace_back(name, slot);
        }
        return o;
    };
    dump_params("eps", bundle_.epsilon_net->params());
    if (bundle_.generator) dump_params("gen", bundle_.generator->params());
    if (bundle_.discriminator) dump_params("disc", bundle_.discriminator->params());
    ckpt.opt_eps = dump_opt(opt_eps_);
    ckpt.opt_gen = dump_opt(opt_gen_);
    ckpt.opt_disc = dump_opt(opt_disc_);
    ckpt.rng_state = rng_.serialize();
    ckpt.history = history_;
    save_checkpoint(path, ckpt);
}

Trainer Trainer::from_checkpoint(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    TrainConfig cfg = TrainConfig::from_map(ckpt.config);
    ModelSpec spec = ModelSpec::from_map(ckpt.config);
    Trainer tr(spec, cfg);

    auto restore_params = [&](const char* prefix, nn::ParamStore& store) {
        std::string pre = std::string(prefix) + "/";
        for (const auto& [name, t] : ckpt.params) {
            if (name.rfind(pre, 0) != 0) continue;
            ag::Var v = store.find(name.substr(pre.size()));
            if (!(v->value.shape == t.shape)) {
                throw std::runtime_error("from_checkpoint: shape mismatch for " + name);
            }
            v->value = t;
        }
    };
    auto restore_opt = [&](Adam& opt, const Checkpoint::OptBlob& o) {
        opt.step_count() = o.t;
        for (const auto& [name, slot] : o.slots) opt.slots()[name] = slot;
    };
    restore_params("eps", tr.bundle_.epsilon_net->params());
    if (tr.bundle_.generator) restore_params("gen", tr.bundle_.generator->params());
    if (tr.bundle_.discriminator) restore_params("disc", tr.bundle_.discriminator->params());
    restore_opt(tr.opt_eps_, ckpt.opt_eps);
    restore_opt(tr.opt_gen_, ckpt.opt_gen);
    restore_opt(tr.opt_disc_, ckpt.opt_disc);
    tr.rng_.deserialize(ckpt.rng_state);
    tr.history_ = ckpt.history;
    tr.next_epoch_ = ckpt.next_epoch;
    return tr;
}

}  // namespace hifibbrg::train
