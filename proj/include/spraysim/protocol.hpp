#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Serial command codec and microcontroller-side emulator.
//
// Wire grammar (normative):
//   frame := ("ON" digit duty3 | "OFF" digit) LF
//   digit := "1".."4"            (up to the configured nozzle count)
//   duty3 := 3 ASCII digits, value <= 255
// ON frames are 7 bytes, OFF frames 5 bytes.

namespace spraysim {

enum class Verb { On, Off };

struct WireCommand {
    Verb verb = Verb::Off;
    int nozzle = 1;
    int duty = 0;  // meaningful for On only

    bool operator==(const WireCommand& o) const {
        return verb == o.verb && nozzle == o.nozzle && (verb == Verb::Off || duty == o.duty);
    }
};

inline std::string encode(const WireCommand& cmd, int max_nozzle = 4) {
    if (cmd.nozzle < 1 || cmd.nozzle > max_nozzle || cmd.nozzle > 9)
        throw std::invalid_argument("encode: nozzle out of range");
    if (cmd.verb == Verb::Off) {
        std::string s = "OFF";
        s += char('0' + cmd.nozzle);
        s += '\n';
        return s;
    }
    if (cmd.duty < 0 || cmd.duty > 255) throw std::invalid_argument("encode: duty out of range");
    std::string s = "ON";
    s += char('0' + cmd.nozzle);
    s += char('0' + cmd.duty / 100);
    s += char('0' + (cmd.duty / 10) % 10);
    s += char('0' + cmd.duty % 10);
    s += '\n';
    return s;
}

struct DecodeError {
    std::string frame;   // offending bytes, LF excluded
    std::string reason;
};

struct DecodeResult {
    std::vector<WireCommand> commands;
    std::string remainder;  // unconsumed suffix (incomplete frame)
    std::vector<DecodeError> errors;
};

namespace detail {

inline bool parse_frame(std::string_view f, int max_nozzle, WireCommand& out, std::string& reason) {
    auto digit = [](char c) { return c >= '0' && c <= '9'; };
    if (f.size() == 4 && f.substr(0, 3) == "OFF") {
        if (!digit(f[3])) { reason = "non-digit nozzle"; return false; }
        int n = f[3] - '0';
        if (n < 1 || n > max_nozzle) { reason = "nozzle out of range"; return false; }
        out = WireCommand{Verb::Off, n, 0};
        return true;
    }
    if (f.size() == 6 && f.substr(0, 2) == "ON") {
        if (!digit(f[2])) { reason = "non-digit nozzle"; return false; }
        int n = f[2] - '0';
        if (n < 1 || n > max_nozzle) { reason = "nozzle out of range"; return false; }
        if (!digit(f[3]) || !digit(f[4]) || !digit(f[5])) { reason = "non-digit duty"; return false; }
        int duty = (f[3] - '0') * 100 + (f[4] - '0') * 10 + (f[5] - '0');
        if (duty > 255) { reason = "duty > 255"; return false; }
        out = WireCommand{Verb::On, n, duty};
        return true;
    }
    reason = f.size() < 4 ? "frame too short" : "bad verb or length";
    return false;
}

}  // namespace detail

// Parses complete LF-terminated frames from an arbitrary (possibly partial)
// byte stream. Malformed frames are recorded and skipped; the stream
// resynchronizes at the next LF.
inline DecodeResult decode(std::string_view bytes, int max_nozzle = 4) {
    DecodeResult r;
    size_t pos = 0;
    while (true) {
        const size_t lf = bytes.find('\n', pos);
        if (lf == std::string_view::npos) {
            r.remainder = std::string(bytes.substr(pos));
            return r;
        }
        const std::string_view frame = bytes.substr(pos, lf - pos);
        WireCommand cmd;
        std::string reason;
        if (detail::parse_frame(frame, max_nozzle, cmd, reason))
            r.commands.push_back(cmd);
        else
            r.errors.push_back(DecodeError{std::string(frame), reason});
        pos = lf + 1;
    }
}

// One PWM solenoid channel. Duty changes latch at the next period boundary;
// within a period the valve is open for the leading duty/255 fraction.
struct ChannelState {
    int active_duty = 0;
    int pending_duty = 0;
    double on_time_ms_accum = 0.0;
};

// Open time span within one step, absolute milliseconds.
struct OpenInterval {
    double begin_ms = 0.0;
    double end_ms = 0.0;
    double length_ms() const { return end_ms - begin_ms; }
};

// Emulates the MCU side: decoding commands, latching duties, and scheduling
// the solenoid valves. Time is advanced monotonically by the caller; the
// emulator reports exact open intervals so downstream consumers do not
// accumulate sampling bias.
class McuEmulator {
  public:
    McuEmulator(int channel_count = 4, double period_ms = 100.0)
        : period_us_(int64_t(period_ms * 1000.0 + 0.5)), channels_(size_t(channel_count)) {
        if (channel_count < 1) throw std::invalid_argument("mcu: need at least one channel");
        if (period_us_ <= 0) throw std::invalid_argument("mcu: period must be > 0");
    }

    int channel_count() const { return int(channels_.size()); }
    double period_ms() const { return period_us_ / 1000.0; }
    double now_ms() const { return now_us_ / 1000.0; }
    const std::vector<DecodeError>& decode_errors() const { return decode_errors_; }

    // Feeds raw bytes; partial frames are buffered until completed.
    void feed(std::string_view bytes) {
        rx_buffer_.append(bytes);
        DecodeResult r = decode(rx_buffer_, channel_count());
        rx_buffer_ = r.remainder;
        for (const DecodeError& e : r.errors) decode_errors_.push_back(e);
        for (const WireCommand& c : r.commands)
            set_duty(c.nozzle, c.verb == Verb::On ? c.duty : 0);
    }

    void set_duty(int nozzle, int duty) {
        if (nozzle < 1 || nozzle > channel_count())
            throw std::invalid_argument("mcu: nozzle out of range");
        if (duty < 0 || duty > 255) throw std::invalid_argument("mcu: duty out of range");
        ChannelState& ch = channels_[size_t(nozzle - 1)];
        ch.pending_duty = duty;
        // A command landing exactly on a period boundary takes effect in the
        // period that starts there.
        if (now_us_ % period_us_ == 0) ch.active_duty = duty;
    }

    int duty(int nozzle) const { return channels_.at(size_t(nozzle - 1)).active_duty; }
    double on_time_ms(int nozzle) const { return channels_.at(size_t(nozzle - 1)).on_time_ms_accum; }

    // Valve state at the current instant.
    bool valve_open(int nozzle) const {
        const ChannelState& ch = channels_.at(size_t(nozzle - 1));
        const double phase_us = double(now_us_ % period_us_);
        return phase_us < on_time_us(ch.active_duty);
    }

    // Advances to `t_ms` (monotone), latching pending duties at every period
    // boundary crossed. Returns the exact open intervals per channel covering
    // (previous time, t_ms]. Intervals from consecutive periods are merged
    // when contiguous.
    std::vector<std::vector<OpenInterval>> advance(double t_ms) {
        const int64_t target_us = int64_t(t_ms * 1000.0 + 0.5);
        if (target_us < now_us_) throw std::logic_error("mcu: time went backwards");
        std::vector<std::vector<OpenInterval>> out(channels_.size());
        while (now_us_ < target_us) {
            const int64_t period_start = now_us_ - now_us_ % period_us_;
            const int64_t period_end = period_start + period_us_;
            const int64_t seg_end = std::min(period_end, target_us);
            for (size_t i = 0; i < channels_.size(); ++i) {
                ChannelState& ch = channels_[i];
                const double open_end_us = double(period_start) + on_time_us(ch.active_duty);
                const double a = double(now_us_);
                const double b = std::min(double(seg_end), open_end_us);
                if (b > a) {
                    ch.on_time_ms_accum += (b - a) / 1000.0;
                    auto& iv = out[i];
                    if (!iv.empty() && iv.back().end_ms == a / 1000.0)
                        iv.back().end_ms = b / 1000.0;
                    else
                        iv.push_back(OpenInterval{a / 1000.0, b / 1000.0});
                }
            }
            now_us_ = seg_end;
            if (now_us_ == period_end)
                for (ChannelState& ch : channels_) ch.active_duty = ch.pending_duty;
        }
        return out;
    }

    // Per-spec sampling entry point: advance and report valve states at `t_ms`.
    std::vector<bool> step(double t_ms) {
        advance(t_ms);
        std::vector<bool> open(channels_.size());
        for (int n = 1; n <= channel_count(); ++n) open[size_t(n - 1)] = valve_open(n);
        return open;
    }

  private:
    double on_time_us(int duty) const { return double(period_us_) * duty / 255.0; }

    int64_t period_us_;
    int64_t now_us_ = 0;
    std::vector<ChannelState> channels_;
    std::string rx_buffer_;
    std::vector<DecodeError> decode_errors_;
};

}  // namespace spraysim
