#pragma once

// Directory persistence for profile sets: a manifest.json with the scalar
// metadata and one checkpoint file per stored field.  Kept out of the core
// profile header so that translation units which only build profiles in
// memory do not pay for the json header.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eplim/profiles.hpp"

namespace eplim {

namespace detail {

inline std::string field_file(int j, const char* name, int k) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "o%d_%s_%03d.bin", j, name, k);
    return buf;
}

inline void save_slice_fields(const std::filesystem::path& dir, int j, int k,
                              const ProfileSlice& s) {
    s.n_e.write_checkpoint((dir / field_file(j, "n_e", k)).string());
    s.u_e.write_checkpoint((dir / field_file(j, "u_e", k)).string());
    s.n_i.write_checkpoint((dir / field_file(j, "n_i", k)).string());
    s.u_i.write_checkpoint((dir / field_file(j, "u_i", k)).string());
    s.phi.write_checkpoint((dir / field_file(j, "phi", k)).string());
    s.dt_n_e.write_checkpoint((dir / field_file(j, "dt_n_e", k)).string());
    s.dt_u_e.write_checkpoint((dir / field_file(j, "dt_u_e", k)).string());
    s.dt_n_i.write_checkpoint((dir / field_file(j, "dt_n_i", k)).string());
    s.dt_u_i.write_checkpoint((dir / field_file(j, "dt_u_i", k)).string());
    if (s.has_p_e) s.p_e.write_checkpoint((dir / field_file(j, "p_e", k)).string());
}

inline ProfileSlice load_slice_fields(const std::filesystem::path& dir, int j, int k,
                                      const Grid& g, bool has_p_e) {
    ProfileSlice s(g);
    auto rd = [&](const char* name) {
        Field f = Field::read_checkpoint((dir / field_file(j, name, k)).string());
        if (f.grid() != g) throw ConfigError("profile load: field grid mismatch");
        return f;
    };
    s.n_e = rd("n_e");
    s.u_e = rd("u_e");
    s.n_i = rd("n_i");
    s.u_i = rd("u_i");
    s.phi = rd("phi");
    s.dt_n_e = rd("dt_n_e");
    s.dt_u_e = rd("dt_u_e");
    s.dt_n_i = rd("dt_n_i");
    s.dt_u_i = rd("dt_u_i");
    if (has_p_e) {
        s.p_e = rd("p_e");
        s.has_p_e = true;
    }
    return s;
}

} // namespace detail

inline void save_profile_set(const ProfileSet& set, const std::string& directory) {
    namespace fs = std::filesystem;
    const fs::path dir(directory);
    fs::create_directories(dir);

    nlohmann::ordered_json m;
    m["schema"] = 1;
    m["kind"] = "profile_set";
    m["regime"] = set.regime == Regime::ZeroElectronMass ? "zero_electron" : "infinity_ion";
    m["order"] = set.order_m;
    m["grid"] = {{"n", set.grid.n}, {"length", set.grid.length}};
    m["gas_law"] = {{"electron", {{"a", set.laws.electron.a()}, {"gamma", set.laws.electron.gamma()}}},
                    {"ion", {{"a", set.laws.ion.a()}, {"gamma", set.laws.ion.gamma()}}}};
    m["lambda"] = set.lambda;
    m["t_end"] = set.t_end;
    m["build_cfl"] = set.build_cfl;
    m["times"] = set.times;
    m["electron_mean_velocity"] = set.electron_mean_velocity;

    for (int j = 0; j < static_cast<int>(set.orders.size()); ++j)
        for (int k = 0; k < static_cast<int>(set.orders[j].size()); ++k)
            detail::save_slice_fields(dir, j, k, set.orders[j][k]);

    std::ofstream out(dir / "manifest.json");
    if (!out) throw ConfigError("save_profile_set: cannot write manifest");
    out << m.dump(2) << "\n";
}

inline ProfileSet load_profile_set(const std::string& directory) {
    namespace fs = std::filesystem;
    const fs::path dir(directory);
    std::ifstream in(dir / "manifest.json");
    if (!in) throw ConfigError("load_profile_set: missing manifest.json in " + directory);
    nlohmann::json m;
    try {
        in >> m;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("load_profile_set: bad manifest: ") + e.what());
    }
    try {
        if (m.at("schema").get<int>() != 1 || m.at("kind").get<std::string>() != "profile_set")
            throw ConfigError("load_profile_set: unrecognized manifest");
        const Grid g(m.at("grid").at("n").get<int>(), m.at("grid").at("length").get<double>());
        const GasLawPair laws{
            GasLaw(m.at("gas_law").at("electron").at("a").get<double>(),
                   m.at("gas_law").at("electron").at("gamma").get<double>()),
            GasLaw(m.at("gas_law").at("ion").at("a").get<double>(),
                   m.at("gas_law").at("ion").at("gamma").get<double>())};
        const std::string regime = m.at("regime").get<std::string>();
        const bool ze = regime == "zero_electron";
        if (!ze && regime != "infinity_ion")
            throw ConfigError("load_profile_set: unknown regime " + regime);

        ProfileSet set(ze ? Regime::ZeroElectronMass : Regime::InfinityIonMass,
                       m.at("order").get<int>(), laws, m.at("lambda").get<double>(), g);
        set.t_end = m.at("t_end").get<double>();
        set.build_cfl = m.at("build_cfl").get<double>();
        set.times = m.at("times").get<std::vector<double>>();
        const auto mv = m.at("electron_mean_velocity").get<std::vector<double>>();
        if (mv.size() != 2) throw ConfigError("load_profile_set: bad mean velocity entry");
        set.electron_mean_velocity = {mv[0], mv[1]};

        set.orders.resize(set.order_m + 1);
        for (int j = 0; j <= set.order_m; ++j)
            for (int k = 0; k < static_cast<int>(set.times.size()); ++k)
                set.orders[j].push_back(detail::load_slice_fields(dir, j, k, g, ze));
        return set;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("load_profile_set: bad manifest: ") + e.what());
    }
}

} // namespace eplim
