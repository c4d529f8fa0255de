// Reference external predictor: cycles the input distance rows to the
// requested output size, exactly like the built-in identity predictor.
// Protocol: argv = <input.escd> <output.escd> <m_out>, exit 0 on success.
//
// Test hooks via ESCAPE_ECHO_BAD: "fail" exits nonzero, "shape" drops a row,
// "anchors" shifts the first anchor, "negative" corrupts one value.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "escape/escd.hpp"

int main(int argc, char** argv) {
    if (argc != 4) {
        std::fprintf(stderr, "usage: %s <input.escd> <output.escd> <m_out>\n", argv[0]);
        return 2;
    }

    const char* bad = std::getenv("ESCAPE_ECHO_BAD");
    if (bad && std::strcmp(bad, "fail") == 0) {
        std::fprintf(stderr, "echo predictor: simulated failure\n");
        return 7;
    }

    try {
        const escape::DistanceMatrix in = escape::read_escd(argv[1]);
        int m_out = std::atoi(argv[3]);
        if (m_out < 1) {
            std::fprintf(stderr, "echo predictor: bad m_out %s\n", argv[3]);
            return 2;
        }

        escape::DistanceMatrix out;
        out.cols = in.cols;
        out.anchors = in.anchors;
        out.rows = m_out;
        out.values.resize(static_cast<std::size_t>(m_out) * in.cols);
        for (int i = 0; i < m_out; ++i) {
            const auto src = in.row(i % in.rows);
            std::copy(src.begin(), src.end(),
                      out.values.begin() + static_cast<std::size_t>(i) * in.cols);
        }

        if (bad && std::strcmp(bad, "shape") == 0) {
            out.rows -= 1;
            out.values.resize(static_cast<std::size_t>(out.rows) * out.cols);
        } else if (bad && std::strcmp(bad, "anchors") == 0) {
            out.anchors.anchors[0].x() += 1.0;
        } else if (bad && std::strcmp(bad, "negative") == 0) {
            // bypass write-side validation by patching the file afterwards
        }

        escape::write_escd(out, argv[2]);

        if (bad && std::strcmp(bad, "negative") == 0) {
            FILE* f = std::fopen(argv[2], "r+b");
            if (f) {
                const long offset = 16 + 3 * 8 * out.cols;  // first distance value
                std::fseek(f, offset, SEEK_SET);
                const double v = -1.0;
                std::fwrite(&v, sizeof(double), 1, f);
                std::fclose(f);
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "echo predictor: %s\n", e.what());
        return 3;
    }
    return 0;
}
