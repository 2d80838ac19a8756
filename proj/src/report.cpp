#include "qlimits/report.hpp"

#include <charconv>
#include <fstream>
#include <system_error>

#include "qlimits/errors.hpp"

namespace qlimits {

namespace {

const char* kind_name(EventKind k) {
    switch (k) {
    case EventKind::Init: return "init";
    case EventKind::Arrival: return "arrival";
    case EventKind::Departure: return "departure";
    case EventKind::Mixed: return "mixed";
    }
    return "unknown";
}

void append_u64(std::string& out, unsigned long long v) { out += std::to_string(v); }

void append_double(std::string& out, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

} // namespace

std::string format_double(double v) {
    std::string s;
    append_double(s, v);
    return s;
}

std::string lln_summary_csv(const LlnReport& report) {
    std::string out = "n,reps,median_sup_q_dev,q90_sup_q_dev,median_sup_a_dev,q90_sup_a_dev\n";
    for (const LlnRow& r : report.rows) {
        append_u64(out, r.n);
        out += ',';
        append_u64(out, r.reps);
        out += ',';
        append_double(out, r.median_q_dev);
        out += ',';
        append_double(out, r.q90_q_dev);
        out += ',';
        append_double(out, r.median_a_dev);
        out += ',';
        append_double(out, r.q90_a_dev);
        out += '\n';
    }
    return out;
}

std::string lln_raw_csv(const LlnReport& report) {
    std::string out = "n,rep,sup_q_dev,sup_a_dev\n";
    for (const LlnRaw& r : report.raw) {
        append_u64(out, r.n);
        out += ',';
        append_u64(out, r.rep);
        out += ',';
        append_double(out, r.sup_q_dev);
        out += ',';
        append_double(out, r.sup_a_dev);
        out += '\n';
    }
    return out;
}

std::string clt_summary_csv(const CltReport& report) {
    std::string out =
        "t,sim_mean,sim_var,limit_mean,limit_var,ks_stat,ks_p_value,mean_gap_se,"
        "var_gap_se,path_convergence_regularity\n";
    for (const CltRow& r : report.rows) {
        append_double(out, r.t);
        out += ',';
        append_double(out, r.sim_mean);
        out += ',';
        append_double(out, r.sim_var);
        out += ',';
        append_double(out, r.lim_mean);
        out += ',';
        append_double(out, r.lim_var);
        out += ',';
        append_double(out, r.ks_stat);
        out += ',';
        append_double(out, r.p_value);
        out += ',';
        append_double(out, r.mean_gap_se);
        out += ',';
        append_double(out, r.var_gap_se);
        out += ',';
        out += report.regularity_holds ? "holds" : "marginals-only";
        out += '\n';
    }
    return out;
}

std::string clt_raw_csv(const CltReport& report) {
    std::string out = "source,rep,t,x\n";
    for (const CltRaw& r : report.raw) {
        out += r.source == 0 ? "sim" : "limit";
        out += ',';
        append_u64(out, r.rep);
        out += ',';
        append_double(out, r.t);
        out += ',';
        append_double(out, r.x);
        out += '\n';
    }
    return out;
}

std::string trace_csv(const SimTrace& trace) {
    std::string out = trace.two_class
                          ? "time,Q,A,Qtilde,E,event_kind,Qhat,Ahat,Acheck\n"
                          : "time,Q,A,Qtilde,E,event_kind\n";
    for (std::size_t i = 0; i < trace.event_times.size(); ++i) {
        append_double(out, trace.event_times[i]);
        out += ',';
        out += std::to_string(trace.q[i]);
        out += ',';
        out += std::to_string(trace.a[i]);
        out += ',';
        out += std::to_string(trace.qtilde[i]);
        out += ',';
        out += std::to_string(trace.e[i]);
        out += ',';
        out += kind_name(trace.kinds[i]);
        if (trace.two_class) {
            out += ',';
            out += std::to_string(trace.qhat[i]);
            out += ',';
            out += std::to_string(trace.ahat[i]);
            out += ',';
            out += std::to_string(trace.acheck[i]);
        }
        out += '\n';
    }
    return out;
}

std::string fluid_csv(const FluidSolution& sol) {
    const bool extended = sol.qhat.has_value();
    std::string out = extended ? "t,q,a,qhat,acheck,ahat\n" : "t,q,a\n";
    const double h = sol.q.step();
    for (std::size_t k = 0; k < sol.q.size(); ++k) {
        append_double(out, h * static_cast<double>(k));
        out += ',';
        append_double(out, sol.q[k]);
        out += ',';
        append_double(out, sol.a[k]);
        if (extended) {
            out += ',';
            append_double(out, (*sol.qhat)[k]);
            out += ',';
            append_double(out, (*sol.acheck)[k]);
            out += ',';
            append_double(out, (*sol.ahat)[k]);
        }
        out += '\n';
    }
    return out;
}

std::string limit_samples_csv(const std::vector<LimitSample>& samples) {
    std::string out = "rep,t,S,Y,Z,X\n";
    for (std::size_t r = 0; r < samples.size(); ++r) {
        const LimitSample& s = samples[r];
        const double h = s.x.step();
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            append_u64(out, r);
            out += ',';
            append_double(out, h * static_cast<double>(k));
            out += ',';
            append_double(out, s.s[k]);
            out += ',';
            append_double(out, s.y[k]);
            out += ',';
            append_double(out, s.z[k]);
            out += ',';
            append_double(out, s.x[k]);
            out += '\n';
        }
    }
    return out;
}

std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<double>& times) {
    if (static_cast<Eigen::Index>(times.size()) != m.rows() || m.rows() != m.cols())
        throw ConfigError("matrix_csv: times must match the (square) matrix dimension");
    std::string out = "t";
    for (double t : times) {
        out += ',';
        append_double(out, t);
    }
    out += '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        append_double(out, times[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out += ',';
            append_double(out, m(i, j));
        }
        out += '\n';
    }
    return out;
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("write failed: " + path);
}

std::string raw_sibling_path(const std::string& summary_path) {
    std::size_t slash = summary_path.find_last_of("/\\");
    std::size_t dot = summary_path.rfind('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return summary_path + "_raw";
    return summary_path.substr(0, dot) + "_raw" + summary_path.substr(dot);
}

void emit_lln_report(const LlnReport& report, const std::string& path) {
    write_file(path, lln_summary_csv(report));
    write_file(raw_sibling_path(path), lln_raw_csv(report));
}

void emit_clt_report(const CltReport& report, const std::string& path) {
    write_file(path, clt_summary_csv(report));
    write_file(raw_sibling_path(path), clt_raw_csv(report));
}

} // namespace qlimits
