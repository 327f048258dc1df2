#include "fpk/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "fpk/errors.hpp"

namespace fpk {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": not a number: '" + value + "'");
    }
}

long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": not an integer: '" + value + "'");
    }
}

std::vector<double> parse_list(const std::string& key, std::string value) {
    // bracketed comma list, e.g. [20, 20, 20]
    value = trim(value);
    if (value.size() < 2 || value.front() != '[' || value.back() != ']')
        throw ConfigError(key + ": expected a [..] list, got '" + value + "'");
    std::vector<double> out;
    std::stringstream ss(value.substr(1, value.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_real(key, item));
    }
    return out;
}

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void RunConfig::validate() const {
    problem_by_name(problem);  // throws on an unknown name
    try {
        train.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("[train] ") + e.what());
    }
    if (reference.n_paths < 2) throw ConfigError("reference.n_paths: must be >= 2");
    if (reference.n_steps < 1) throw ConfigError("reference.n_steps: must be >= 1");
    if (reference.scheme != "em" && reference.scheme != "milstein")
        throw ConfigError("reference.scheme: must be 'em' or 'milstein'");
    if (grid.n_space < 2) throw ConfigError("report.n_space: must be >= 2");
    if (grid.n_time < 2) throw ConfigError("report.n_time: must be >= 2");
    if (t0 && t1 && *t1 <= *t0) throw ConfigError("problem.t1: must exceed problem.t0");
    if (space_box) {
        const auto base = problem_by_name(problem);
        if (static_cast<int>(space_box->size()) != base.dim)
            throw ConfigError("problem.box: dimension mismatch");
        for (const auto& side : *space_box)
            if (side[1] <= side[0]) throw ConfigError("problem.box: hi must exceed lo");
    }
    if (c_t && *c_t <= 0.0) throw ConfigError("problem.c_t: must be positive");
}

FpkProblem RunConfig::make_problem() const {
    FpkProblem p = problem_by_name(problem);
    if (t0) p.t0 = *t0;
    if (t1) p.t1 = *t1;
    if (c_t) p.c_t = *c_t;
    if (space_box) p.space_box = *space_box;
    return p;
}

std::string RunConfig::to_text() const {
    std::ostringstream out;
    out << "[problem]\n";
    out << "name = " << problem << "\n";
    if (t0) out << "t0 = " << format_real(*t0) << "\n";
    if (t1) out << "t1 = " << format_real(*t1) << "\n";
    if (c_t) out << "c_t = " << format_real(*c_t) << "\n";
    if (space_box) {
        for (std::size_t i = 0; i < space_box->size(); ++i)
            out << "box" << i + 1 << " = [" << format_real((*space_box)[i][0]) << ", "
                << format_real((*space_box)[i][1]) << "]\n";
    }
    out << "\n[net]\n";
    out << "hidden = [";
    for (std::size_t i = 0; i < train.hidden.size(); ++i)
        out << (i ? ", " : "") << train.hidden[i];
    out << "]\n";
    out << "\n[sampling]\n";
    out << "n_per_slice = " << train.n_per_slice << "\n";
    out << "time_slices = " << train.time_slices << "\n";
    out << "n_boundary = " << train.n_boundary << "\n";
    out << "n_initial = " << train.n_initial << "\n";
    out << "candidate_factor = " << train.candidate_factor << "\n";
    out << "snapshot_factor = " << train.snapshot_factor << "\n";
    out << "\n[loss]\n";
    out << "mask = " << mask_to_string(train.mask) << "\n";
    out << "normalization_mu = " << format_real(train.normalization_mu) << "\n";
    out << "\n[train]\n";
    out << "variant = " << variant_to_string(train.variant) << "\n";
    out << "epochs_per_round = " << train.epochs_per_round << "\n";
    out << "lr = " << format_real(train.lr) << "\n";
    out << "epsilon = " << format_real(train.epsilon) << "\n";
    out << "n_max = " << train.n_max << "\n";
    out << "n_adap = " << train.n_adap << "\n";
    out << "beta = " << format_real(train.beta) << "\n";
    if (train.augment_factor >= 0.0)
        out << "augment_factor = " << format_real(train.augment_factor) << "\n";
    out << "seed = " << train.seed << "\n";
    out << "\n[reference]\n";
    out << "n_paths = " << reference.n_paths << "\n";
    out << "n_steps = " << reference.n_steps << "\n";
    out << "scheme = " << reference.scheme << "\n";
    if (reference_file) out << "file = " << *reference_file << "\n";
    out << "\n[report]\n";
    out << "n_space = " << grid.n_space << "\n";
    out << "n_time = " << grid.n_time << "\n";
    if (!out_dir.empty()) out << "out_dir = " << out_dir << "\n";
    return out.str();
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    std::vector<std::array<double, 2>> box;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            static const char* known[] = {"problem", "net", "sampling",
                                          "loss",    "train", "reference", "report"};
            bool ok = false;
            for (const char* s : known) ok = ok || section == s;
            if (!ok) throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string qual = section + "." + key;

        if (section == "problem") {
            if (key == "name") cfg.problem = value;
            else if (key == "t0") cfg.t0 = parse_real(qual, value);
            else if (key == "t1") cfg.t1 = parse_real(qual, value);
            else if (key == "c_t") cfg.c_t = parse_real(qual, value);
            else if (key.rfind("box", 0) == 0) {
                const long axis = parse_int(qual, key.substr(3));
                const auto side = parse_list(qual, value);
                if (axis < 1 || axis > 3 || side.size() != 2)
                    throw ConfigError(qual + ": expected boxN = [lo, hi]");
                if (box.size() < static_cast<std::size_t>(axis)) box.resize(axis);
                box[axis - 1] = {side[0], side[1]};
            } else throw ConfigError("unknown key " + qual);
        } else if (section == "net") {
            if (key == "hidden") {
                cfg.train.hidden.clear();
                for (double w : parse_list(qual, value)) {
                    if (w < 1.0 || w != static_cast<long>(w))
                        throw ConfigError(qual + ": widths must be positive integers");
                    cfg.train.hidden.push_back(static_cast<int>(w));
                }
            } else throw ConfigError("unknown key " + qual);
        } else if (section == "sampling") {
            if (key == "n_per_slice") cfg.train.n_per_slice = static_cast<int>(parse_int(qual, value));
            else if (key == "time_slices") cfg.train.time_slices = static_cast<int>(parse_int(qual, value));
            else if (key == "n_boundary") cfg.train.n_boundary = static_cast<int>(parse_int(qual, value));
            else if (key == "n_initial") cfg.train.n_initial = static_cast<int>(parse_int(qual, value));
            else if (key == "candidate_factor") cfg.train.candidate_factor = static_cast<int>(parse_int(qual, value));
            else if (key == "snapshot_factor") cfg.train.snapshot_factor = static_cast<int>(parse_int(qual, value));
            else throw ConfigError("unknown key " + qual);
        } else if (section == "loss") {
            if (key == "mask") {
                try {
                    cfg.train.mask = mask_from_string(value);
                } catch (const std::exception& e) {
                    throw ConfigError(qual + ": " + e.what());
                }
            } else if (key == "normalization_mu") cfg.train.normalization_mu = parse_real(qual, value);
            else throw ConfigError("unknown key " + qual);
        } else if (section == "train") {
            if (key == "variant") {
                try {
                    cfg.train.variant = variant_from_string(value);
                } catch (const std::exception& e) {
                    throw ConfigError(qual + ": " + e.what());
                }
            } else if (key == "epochs_per_round") cfg.train.epochs_per_round = static_cast<int>(parse_int(qual, value));
            else if (key == "lr") cfg.train.lr = parse_real(qual, value);
            else if (key == "epsilon") cfg.train.epsilon = parse_real(qual, value);
            else if (key == "n_max") cfg.train.n_max = static_cast<int>(parse_int(qual, value));
            else if (key == "n_adap") cfg.train.n_adap = static_cast<int>(parse_int(qual, value));
            else if (key == "beta") cfg.train.beta = parse_real(qual, value);
            else if (key == "augment_factor") cfg.train.augment_factor = parse_real(qual, value);
            else if (key == "seed") cfg.train.seed = static_cast<std::uint64_t>(parse_int(qual, value));
            else throw ConfigError("unknown key " + qual);
        } else if (section == "reference") {
            if (key == "n_paths") cfg.reference.n_paths = static_cast<int>(parse_int(qual, value));
            else if (key == "n_steps") cfg.reference.n_steps = static_cast<int>(parse_int(qual, value));
            else if (key == "scheme") cfg.reference.scheme = value;
            else if (key == "file") cfg.reference_file = value;
            else throw ConfigError("unknown key " + qual);
        } else if (section == "report") {
            if (key == "n_space") cfg.grid.n_space = static_cast<int>(parse_int(qual, value));
            else if (key == "n_time") cfg.grid.n_time = static_cast<int>(parse_int(qual, value));
            else if (key == "out_dir") cfg.out_dir = value;
            else throw ConfigError("unknown key " + qual);
        } else {
            throw ConfigError("line " + std::to_string(line_no) + ": key outside any section");
        }
    }
    if (!box.empty()) {
        for (const auto& side : box)
            if (side[0] == 0.0 && side[1] == 0.0)
                throw ConfigError("problem.box: missing axis entry");
        cfg.space_box = std::move(box);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace fpk
