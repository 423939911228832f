#ifndef METASINR_CSV_HPP
#define METASINR_CSV_HPP

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace metasinr {

// Minimal CSV emitter. Floats print with 9 significant digits so repeated
// runs produce byte-identical files.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open output file: " + path);
    }

    void header(const std::vector<std::string>& cols) { row_strings(cols); }

    class Row {
    public:
        explicit Row(CsvWriter& w) : w_(w) {}
        ~Row() { w_.out_ << '\n'; }
        Row& col(double v) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.9g", v);
            return raw(buf);
        }
        Row& col(int v) { return raw(std::to_string(v)); }
        Row& col(long long v) { return raw(std::to_string(v)); }
        Row& col(std::size_t v) { return raw(std::to_string(v)); }
        Row& col(const std::string& v) { return raw(v); }
        Row& empty() { return raw(""); }

    private:
        Row& raw(const std::string& s) {
            if (!first_) w_.out_ << ',';
            first_ = false;
            w_.out_ << s;
            return *this;
        }
        CsvWriter& w_;
        bool first_ = true;
    };

    Row row() { return Row(*this); }

private:
    void row_strings(const std::vector<std::string>& cols) {
        for (std::size_t i = 0; i < cols.size(); ++i)
            out_ << (i ? "," : "") << cols[i];
        out_ << '\n';
    }
    std::ofstream out_;
};

}  // namespace metasinr

#endif
