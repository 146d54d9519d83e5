// Scriptable child process for exercising the external plugin protocol.
//
//   DETECT <path> [x y w h]   -> OK n + n BOX lines (the --box list)
//   INIT <path> x y w h       -> OK 0, remembers the box
//   TRACK <path>              -> OK 1 + BOX of the remembered box
//
// Faults are keyed on the 1-based request count of this process.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dronemon/text.hpp"

namespace {

struct StubBox {
    double x, y, w, h, score;
};

StubBox parse_box(const std::string& text) {
    const auto parts = dronemon::split(text, ',');
    if (parts.size() != 5) {
        throw std::invalid_argument("--box wants x,y,w,h,score");
    }
    double v[5];
    for (int i = 0; i < 5; ++i) {
        const auto r = dronemon::parse_real(dronemon::trim(parts[i]));
        if (!r) {
            throw std::invalid_argument("--box: bad number in '" + text + "'");
        }
        v[i] = *r;
    }
    return {v[0], v[1], v[2], v[3], v[4]};
}

void emit(const StubBox& b) {
    std::cout << "BOX " << dronemon::format_real(b.x) << ' ' << dronemon::format_real(b.y) << ' '
              << dronemon::format_real(b.w) << ' ' << dronemon::format_real(b.h) << ' '
              << dronemon::format_real(b.score) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"protocol stub"};
    std::vector<std::string> box_specs;
    long malformed_at = 0;
    long err_at = 0;
    long hang_at = 0;
    long exit_at = 0;
    long short_at = 0;
    bool check_frame = false;
    app.add_option("--box", box_specs, "x,y,w,h,score returned by DETECT (repeatable)");
    app.add_option("--malformed-at", malformed_at, "answer request N with garbage");
    app.add_option("--short-at", short_at, "announce one more box than sent on request N");
    app.add_option("--err-at", err_at, "answer request N with ERR");
    app.add_option("--hang-at", hang_at, "never answer request N");
    app.add_option("--exit-at", exit_at, "exit without answering request N");
    app.add_flag("--check-frame", check_frame, "ERR when the frame file does not exist");
    CLI11_PARSE(app, argc, argv);

    std::vector<StubBox> boxes;
    try {
        for (const auto& s : box_specs) {
            boxes.push_back(parse_box(s));
        }
    } catch (const std::exception& e) {
        std::cerr << "stub_detector: " << e.what() << '\n';
        return 2;
    }

    StubBox tracked{0, 0, 1, 1, 0};
    long count = 0;
    std::string line;
    while (std::getline(std::cin, line)) {
        ++count;
        if (count == exit_at) {
            return 3;
        }
        if (count == hang_at) {
            std::this_thread::sleep_for(std::chrono::hours(1));
        }
        if (count == malformed_at) {
            std::cout << "GARBAGE response" << std::endl;
            continue;
        }
        if (count == err_at) {
            std::cout << "ERR scripted failure" << std::endl;
            continue;
        }
        std::vector<std::string> f;
        for (const auto part : dronemon::split(dronemon::trim(line), ' ')) {
            if (!part.empty()) {
                f.emplace_back(part);
            }
        }
        if (f.empty()) {
            std::cout << "ERR empty request" << std::endl;
            continue;
        }
        if (check_frame && f.size() >= 2 && !std::filesystem::exists(f[1])) {
            std::cout << "ERR missing frame " << f[1] << std::endl;
            continue;
        }
        if (f[0] == "DETECT" && (f.size() == 2 || f.size() == 6)) {
            const std::size_t announced = boxes.size() + (count == short_at ? 1 : 0);
            std::cout << "OK " << announced << '\n';
            for (const auto& b : boxes) {
                emit(b);
            }
            std::cout.flush();
        } else if (f[0] == "INIT" && f.size() == 6) {
            double v[4];
            bool ok = true;
            for (int i = 0; i < 4; ++i) {
                const auto r = dronemon::parse_real(f[2 + i]);
                ok = ok && r.has_value();
                v[i] = r.value_or(0.0);
            }
            if (!ok) {
                std::cout << "ERR bad INIT box" << std::endl;
                continue;
            }
            tracked = {v[0], v[1], v[2], v[3], 1.0};
            std::cout << "OK 0" << std::endl;
        } else if (f[0] == "TRACK" && f.size() == 2) {
            std::cout << "OK 1\n";
            emit(tracked);
            std::cout.flush();
        } else {
            std::cout << "ERR unknown request" << std::endl;
        }
    }
    return 0;
}
