#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "vtwin/csv.hpp"
#include "vtwin/errors.hpp"
#include "vtwin/features.hpp"
#include "vtwin/queueing.hpp"
#include "vtwin/rng.hpp"

namespace vtwin {

/// Traffic disturbance over a time interval. Flood profiles superpose extra
/// request arrivals; jam profiles corrupt packets in the window and degrade
/// their signal-quality score, optionally adding bursty retry traffic.
struct AttackProfile {
    enum class Kind { flood, jam };

    Kind kind = Kind::flood;
    double start = 0.0;
    double end = 0.0;
    double flood_multiplier = 0.0; // flood: arrival-rate multiplier, > 1
    double jam_loss = 0.0;         // jam: per-packet corruption probability, (0, 1]
    double jam_burst = 1.0;        // jam: arrival burstiness factor, >= 1

    static AttackProfile flood(double start, double end, double multiplier) {
        AttackProfile p;
        p.kind = Kind::flood;
        p.start = start;
        p.end = end;
        p.flood_multiplier = multiplier;
        return p;
    }

    static AttackProfile jam(double start, double end, double loss, double burst = 1.0) {
        AttackProfile p;
        p.kind = Kind::jam;
        p.start = start;
        p.end = end;
        p.jam_loss = loss;
        p.jam_burst = burst;
        return p;
    }

    bool covers(double t) const { return t >= start && t < end; }
};

/// One simulated run of the RSU data layer.
struct Scenario {
    QueueParams params;
    double duration = 0.0;
    std::uint64_t seed = 0;
    std::vector<AttackProfile> attacks;
    std::optional<double> message_lifetime; // nullopt = no expiry
    double feature_window = 1.0;
    // Extra per-request service time, used when a detector runs in the
    // serving loop.
    double service_overhead = 0.0;

    void validate() const {
        if (!(params.lambda_r > 0.0) || !(params.mu > 0.0) || params.m < 1)
            throw invalid_scenario_error("scenario: queue parameters must be positive");
        if (!(duration > 0.0)) throw invalid_scenario_error("scenario: duration must be positive");
        if (!(feature_window > 0.0) || feature_window > duration)
            throw invalid_scenario_error("scenario: feature window must be in (0, duration]");
        if (message_lifetime && !(*message_lifetime > 0.0))
            throw invalid_scenario_error("scenario: message lifetime must be positive");
        if (service_overhead < 0.0)
            throw invalid_scenario_error("scenario: service overhead must be non-negative");
        for (const auto& a : attacks) {
            if (!(a.end > a.start) || a.start < 0.0 || a.end > duration)
                throw invalid_scenario_error("scenario: attack interval outside [0, duration]");
            if (a.kind == AttackProfile::Kind::flood && !(a.flood_multiplier > 1.0))
                throw invalid_scenario_error("scenario: flood multiplier must exceed 1");
            if (a.kind == AttackProfile::Kind::jam &&
                (!(a.jam_loss > 0.0) || a.jam_loss > 1.0 || a.jam_burst < 1.0))
                throw invalid_scenario_error("scenario: jam loss in (0,1], burstiness >= 1");
        }
    }
};

/// One communication event. Dropped packets carry no channel, service start
/// or departure.
struct PacketRecord {
    std::uint64_t id = 0;
    double arrival_time = 0.0;
    std::optional<double> service_start;
    std::optional<double> departure_time;
    std::optional<int> channel;
    std::uint32_t size_bytes = 0;
    double rssi_proxy = 0.0;
    double relative_speed = 0.0;
    bool attack = false;

    bool delivered() const { return departure_time.has_value(); }

    bool operator==(const PacketRecord&) const = default;
};

struct SimStats {
    std::size_t completed = 0;
    std::size_t dropped = 0;
    double mean_wait = 0.0;      // queue wait of served packets
    double mean_queue_len = 0.0; // time average over [0, duration]
    double delivery_rate = 0.0;
    double mean_delay = 0.0; // arrival to departure, served packets
};

struct TraceLog {
    Scenario scenario;
    std::vector<PacketRecord> packets;
    SimStats stats;
};

namespace detail {

// stream tags
inline constexpr std::uint64_t kArrivalStream = 0x41;
inline constexpr std::uint64_t kServiceStream = 0x53;
inline constexpr std::uint64_t kJamStream = 0x4a;
inline constexpr std::uint64_t kAttrStream = 0x46;
inline constexpr std::uint64_t kExtraArrivalStream = 0x58;

struct PendingArrival {
    double time;
    bool from_attack_process;
};

// Poisson arrivals on [t0, t1) at a fixed rate.
inline void poisson_arrivals(Rng& rng, double rate, double t0, double t1, bool attack_process,
                             std::vector<PendingArrival>& out) {
    if (rate <= 0.0) return;
    double t = t0;
    while (true) {
        t += rng.exponential(rate);
        if (t >= t1) break;
        out.push_back({t, attack_process});
    }
}

inline double wait_time_of(const PacketRecord& p, const std::optional<double>& lifetime) {
    if (p.service_start) return *p.service_start - p.arrival_time;
    if (!lifetime) return 0.0;
    return *lifetime; // expired in queue
}

} // namespace detail

/// Event-driven M/M/m FIFO simulation of the data layer. Arrivals stop at
/// `duration`; the queue then drains so every packet ends either completed or
/// dropped. Deterministic for a fixed scenario: the benign arrival process,
/// each attack's extra arrivals, service draws, jam corruption coins and
/// packet attributes each consume their own seeded stream, so attaching an
/// attack profile leaves benign arrival times untouched.
inline TraceLog run(const Scenario& scenario) {
    scenario.validate();
    const auto& prm = scenario.params;

    // 1. benign arrivals
    std::vector<detail::PendingArrival> arrivals;
    {
        Rng rng(derive_seed(scenario.seed, detail::kArrivalStream));
        detail::poisson_arrivals(rng, prm.lambda_r, 0.0, scenario.duration, false, arrivals);
    }
    // 2. extra arrivals from attack profiles (flood: lambda*(mult-1),
    //    jam: lambda*(burst-1)), one stream per profile
    for (std::size_t i = 0; i < scenario.attacks.size(); ++i) {
        const auto& a = scenario.attacks[i];
        const double extra_rate = a.kind == AttackProfile::Kind::flood
                                      ? prm.lambda_r * (a.flood_multiplier - 1.0)
                                      : prm.lambda_r * (a.jam_burst - 1.0);
        Rng rng(derive_seed(scenario.seed, detail::kExtraArrivalStream, i));
        detail::poisson_arrivals(rng, extra_rate, a.start, a.end, true, arrivals);
    }
    std::stable_sort(arrivals.begin(), arrivals.end(),
                     [](const auto& a, const auto& b) { return a.time < b.time; });

    Rng service_rng(derive_seed(scenario.seed, detail::kServiceStream));
    Rng jam_rng(derive_seed(scenario.seed, detail::kJamStream));
    Rng attr_rng(derive_seed(scenario.seed, detail::kAttrStream));

    TraceLog trace;
    trace.scenario = scenario;
    trace.packets.reserve(arrivals.size());

    const auto in_any = [&](double t, AttackProfile::Kind kind) {
        for (const auto& a : scenario.attacks)
            if (a.kind == kind && a.covers(t)) return true;
        return false;
    };
    const auto attack_label = [&](double t) {
        for (const auto& a : scenario.attacks)
            if (a.covers(t)) return true;
        return false;
    };
    const auto combined_jam_loss = [&](double t) {
        double keep = 1.0;
        for (const auto& a : scenario.attacks)
            if (a.kind == AttackProfile::Kind::jam && a.covers(t)) keep *= 1.0 - a.jam_loss;
        return 1.0 - keep;
    };

    // build packets with attributes, in arrival order
    for (std::size_t i = 0; i < arrivals.size(); ++i) {
        PacketRecord p;
        p.id = i;
        p.arrival_time = arrivals[i].time;
        p.attack = attack_label(p.arrival_time);
        const bool small_flood_packet =
            arrivals[i].from_attack_process && in_any(p.arrival_time, AttackProfile::Kind::flood);
        p.size_bytes = static_cast<std::uint32_t>(
            small_flood_packet ? attr_rng.uniform_int(64, 400) : attr_rng.uniform_int(200, 1200));
        double rssi = attr_rng.normal(0.85, 0.05);
        if (in_any(p.arrival_time, AttackProfile::Kind::jam))
            rssi -= 0.25 + 0.5 * combined_jam_loss(p.arrival_time);
        p.rssi_proxy = std::clamp(rssi, 0.0, 1.0);
        p.relative_speed = std::clamp(attr_rng.normal(15.0, 6.0), 0.0, 45.0);
        trace.packets.push_back(p);
    }

    // event loop: arrival cursor + departure heap; at equal times departures
    // go first, then lower packet id
    struct Departure {
        double time;
        std::uint64_t id;
        int channel;
        bool operator>(const Departure& o) const {
            return time != o.time ? time > o.time : id > o.id;
        }
    };
    std::priority_queue<Departure, std::vector<Departure>, std::greater<Departure>> departures;
    std::set<int> free_channels;
    for (int c = 0; c < prm.m; ++c) free_channels.insert(c);
    std::deque<std::uint64_t> fifo;

    const auto start_service = [&](std::uint64_t id, double now) {
        const int ch = *free_channels.begin();
        free_channels.erase(free_channels.begin());
        auto& p = trace.packets[id];
        p.service_start = now;
        p.channel = ch;
        const double svc = service_rng.exponential(prm.mu) + scenario.service_overhead;
        departures.push(Departure{now + svc, id, ch});
    };

    // pops expired queue heads, then dispatches while channels are free
    const auto dispatch = [&](double now) {
        while (!free_channels.empty() && !fifo.empty()) {
            const std::uint64_t id = fifo.front();
            const auto& p = trace.packets[id];
            if (scenario.message_lifetime &&
                now - p.arrival_time > *scenario.message_lifetime) {
                fifo.pop_front();
                continue; // expired: stays without service fields
            }
            fifo.pop_front();
            start_service(id, now);
        }
    };

    std::vector<bool> corrupted(trace.packets.size(), false);
    std::size_t cursor = 0;
    while (cursor < trace.packets.size() || !departures.empty()) {
        const bool have_arrival = cursor < trace.packets.size();
        const bool departure_next =
            !departures.empty() &&
            (!have_arrival || departures.top().time <= trace.packets[cursor].arrival_time);
        if (departure_next) {
            const Departure d = departures.top();
            departures.pop();
            trace.packets[d.id].departure_time = d.time;
            free_channels.insert(d.channel);
            dispatch(d.time);
        } else {
            auto& p = trace.packets[cursor];
            ++cursor;
            const double now = p.arrival_time;
            if (in_any(now, AttackProfile::Kind::jam) &&
                jam_rng.uniform01() < combined_jam_loss(now)) {
                corrupted[p.id] = true; // lost on arrival, never queued
                continue;
            }
            fifo.push_back(p.id);
            dispatch(now);
        }
    }

    // stats
    auto& st = trace.stats;
    double wait_sum = 0.0, delay_sum = 0.0, queue_time_area = 0.0;
    for (const auto& p : trace.packets) {
        if (p.delivered()) {
            ++st.completed;
            wait_sum += *p.service_start - p.arrival_time;
            delay_sum += *p.departure_time - p.arrival_time;
        } else {
            ++st.dropped;
        }
        // waiting interval inside [0, duration]: served packets wait until
        // service, expired ones until their lifetime runs out, corrupted
        // ones not at all
        double wait_end = p.arrival_time;
        if (p.service_start)
            wait_end = *p.service_start;
        else if (!corrupted[p.id] && scenario.message_lifetime)
            wait_end = p.arrival_time + *scenario.message_lifetime;
        const double a = std::min(p.arrival_time, scenario.duration);
        const double b = std::min(wait_end, scenario.duration);
        if (b > a) queue_time_area += b - a;
    }
    st.mean_wait = st.completed ? wait_sum / static_cast<double>(st.completed) : 0.0;
    st.mean_delay = st.completed ? delay_sum / static_cast<double>(st.completed) : 0.0;
    st.mean_queue_len = queue_time_area / scenario.duration;
    const std::size_t total = st.completed + st.dropped;
    st.delivery_rate = total ? static_cast<double>(st.completed) / static_cast<double>(total) : 0.0;
    return trace;
}

/// Empirical counterpart of the analytical metrics, for cross-validation.
/// Meaningful for attack-free, stable, no-expiry traces.
struct EmpiricalMetrics {
    std::size_t completed = 0;
    double mean_wait = 0.0;      // ~ t_q
    double mean_queue_len = 0.0; // ~ n_q
    double mean_system_time = 0.0; // ~ t_total
    double utilization = 0.0;    // busy channel-time fraction ~ rho
};

inline EmpiricalMetrics empirical_metrics(const TraceLog& trace) {
    EmpiricalMetrics em;
    const double horizon = trace.scenario.duration;
    double wait_sum = 0.0, sys_sum = 0.0, queue_area = 0.0, busy_area = 0.0;
    for (const auto& p : trace.packets) {
        if (!p.delivered()) continue;
        ++em.completed;
        wait_sum += *p.service_start - p.arrival_time;
        sys_sum += *p.departure_time - p.arrival_time;
        const double qa = std::min(p.arrival_time, horizon);
        const double qb = std::min(*p.service_start, horizon);
        if (qb > qa) queue_area += qb - qa;
        const double ba = std::min(*p.service_start, horizon);
        const double bb = std::min(*p.departure_time, horizon);
        if (bb > ba) busy_area += bb - ba;
    }
    if (em.completed < 1000)
        throw insufficient_data_error("empirical metrics need at least 1000 completions, got " +
                                      std::to_string(em.completed));
    em.mean_wait = wait_sum / static_cast<double>(em.completed);
    em.mean_system_time = sys_sum / static_cast<double>(em.completed);
    em.mean_queue_len = queue_area / horizon;
    em.utilization = busy_area / (horizon * trace.scenario.params.m);
    return em;
}

// Fixed column set of windowized traces.
inline const std::vector<std::string>& window_feature_names() {
    static const std::vector<std::string> names = {
        "arrival_count", "mean_wait", "max_wait",  "drop_count",
        "mean_size",     "mean_rssi", "mean_speed", "busy_fraction"};
    return names;
}

/// Aggregates the trace into consecutive windows of `window` seconds:
/// ceil(duration / window) rows. A window is labelled attack when more than
/// half of its packets are attack-labelled. Wait statistics cover packets
/// that reached service; drops count packets that never did.
inline FeatureTable windowize(const TraceLog& trace, double window) {
    if (!(window > 0.0)) throw invalid_parameter_error("windowize: window must be positive");
    if (trace.packets.empty()) throw empty_input_error("windowize: empty trace");
    const double duration = trace.scenario.duration;
    const std::size_t n = static_cast<std::size_t>(std::ceil(duration / window));
    const int m = trace.scenario.params.m;

    struct Acc {
        std::size_t arrivals = 0, drops = 0, waits = 0, attacks = 0;
        double wait_sum = 0, wait_max = 0, size_sum = 0, rssi_sum = 0, speed_sum = 0, busy = 0;
    };
    std::vector<Acc> acc(n);

    const auto widx = [&](double t) {
        auto i = static_cast<std::size_t>(t / window);
        return i >= n ? n - 1 : i;
    };

    for (const auto& p : trace.packets) {
        if (p.arrival_time >= duration) continue;
        auto& a = acc[widx(p.arrival_time)];
        ++a.arrivals;
        a.size_sum += p.size_bytes;
        a.rssi_sum += p.rssi_proxy;
        a.speed_sum += p.relative_speed;
        if (p.attack) ++a.attacks;
        if (p.service_start) {
            const double w = *p.service_start - p.arrival_time;
            ++a.waits;
            a.wait_sum += w;
            a.wait_max = std::max(a.wait_max, w);
        } else {
            ++a.drops;
        }
        // busy time can extend past the arrival window
        if (p.service_start && p.departure_time) {
            double s = *p.service_start, e = std::min(*p.departure_time, duration);
            while (s < e) {
                const std::size_t wi = widx(s);
                const double wend = std::min((static_cast<double>(wi) + 1.0) * window, duration);
                const double seg = std::min(e, wend) - s;
                acc[wi].busy += seg;
                s = wend;
                if (wi + 1 >= n) break;
            }
        }
    }

    FeatureTable out;
    out.column_names = window_feature_names();
    std::vector<int> labels;
    out.rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = acc[i];
        const double wlen = std::min(duration, (static_cast<double>(i) + 1.0) * window) -
                            static_cast<double>(i) * window;
        out.rows.push_back({static_cast<double>(a.arrivals),
                            a.waits ? a.wait_sum / static_cast<double>(a.waits) : 0.0, a.wait_max,
                            static_cast<double>(a.drops),
                            a.arrivals ? a.size_sum / static_cast<double>(a.arrivals) : 0.0,
                            a.arrivals ? a.rssi_sum / static_cast<double>(a.arrivals) : 0.0,
                            a.arrivals ? a.speed_sum / static_cast<double>(a.arrivals) : 0.0,
                            a.busy / (wlen * static_cast<double>(m))});
        labels.push_back(a.arrivals && 2 * a.attacks > a.arrivals ? kAttack : kBenign);
    }
    out.labels = std::move(labels);
    return out;
}

// ---- trace CSV (fixed header, absent values empty) ----

inline const char* kTraceCsvHeader =
    "id,arrival_time,service_start,departure_time,channel,size_bytes,rssi_proxy,relative_speed,"
    "label";

inline void write_trace_csv(const TraceLog& trace, std::ostream& os) {
    os << kTraceCsvHeader << '\n';
    for (const auto& p : trace.packets) {
        os << p.id << ',' << csv::format_double(p.arrival_time) << ',';
        if (p.service_start) os << csv::format_double(*p.service_start);
        os << ',';
        if (p.departure_time) os << csv::format_double(*p.departure_time);
        os << ',';
        if (p.channel) os << *p.channel;
        os << ',' << p.size_bytes << ',' << csv::format_double(p.rssi_proxy) << ','
           << csv::format_double(p.relative_speed) << ',' << (p.attack ? "attack" : "benign")
           << '\n';
    }
}

inline void write_trace_csv(const TraceLog& trace, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot write " + path);
    write_trace_csv(trace, os);
}

inline std::vector<PacketRecord> read_trace_csv(std::istream& in,
                                                const std::string& source = "<trace>") {
    auto doc = csv::parse(in, source);
    std::vector<std::string> expected;
    {
        std::string h = kTraceCsvHeader, field;
        for (char c : h) {
            if (c == ',') {
                expected.push_back(field);
                field.clear();
            } else
                field.push_back(c);
        }
        expected.push_back(field);
    }
    if (doc.header != expected) throw parse_error(source + ": unexpected trace header");
    std::vector<PacketRecord> out;
    out.reserve(doc.rows.size());
    for (std::size_t i = 0; i < doc.rows.size(); ++i) {
        const auto& r = doc.rows[i];
        const std::string ctx = source + " row " + std::to_string(i + 2);
        PacketRecord p;
        p.id = static_cast<std::uint64_t>(csv::parse_double(r[0], ctx));
        p.arrival_time = csv::parse_double(r[1], ctx);
        if (!r[2].empty()) p.service_start = csv::parse_double(r[2], ctx);
        if (!r[3].empty()) p.departure_time = csv::parse_double(r[3], ctx);
        if (!r[4].empty()) p.channel = static_cast<int>(csv::parse_double(r[4], ctx));
        p.size_bytes = static_cast<std::uint32_t>(csv::parse_double(r[5], ctx));
        p.rssi_proxy = csv::parse_double(r[6], ctx);
        p.relative_speed = csv::parse_double(r[7], ctx);
        if (r[8] == "attack")
            p.attack = true;
        else if (r[8] == "benign")
            p.attack = false;
        else
            throw parse_error(ctx + ": label must be 'benign' or 'attack'");
        out.push_back(p);
    }
    return out;
}

inline std::vector<PacketRecord> read_trace_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    return read_trace_csv(in, path);
}

} // namespace vtwin
