#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fcntl.h>

#include <cerrno>
#include <cstring>
#include <sstream>

#include "cartoforge/render/renderer.hpp"
#include "cartoforge/util/fs.hpp"

extern char** environ;

namespace cartoforge::render {

namespace fs = std::filesystem;

AdapterSpec AdapterSpec::parse(std::string_view command_line) {
    AdapterSpec spec;
    std::istringstream in{std::string(command_line)};
    for (std::string word; in >> word;) spec.command.push_back(word);
    return spec;
}

namespace {

fs::path resolve_executable(const std::string& name) {
    auto runnable = [](const fs::path& p) {
        std::error_code ec;
        return fs::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
    };
    if (name.find('/') != std::string::npos) {
        if (runnable(name)) return name;
        throw Error(ErrorKind::AdapterNotFound, "adapter \"" + name + "\" is not an executable file");
    }
    const char* path = std::getenv("PATH");
    std::istringstream dirs(path ? path : "");
    for (std::string dir; std::getline(dirs, dir, ':');) {
        const fs::path candidate = fs::path(dir.empty() ? "." : dir) / name;
        if (runnable(candidate)) return candidate;
    }
    throw Error(ErrorKind::AdapterNotFound, "adapter \"" + name + "\" not found on PATH");
}

}  // namespace

RenderedMap external_render(const compiler::CompiledStyle& style, const compiler::SpriteBundle& sprite,
                            const MapDataset& dataset, Viewport vp, const AdapterSpec& adapter) {
    if (adapter.command.empty()) throw Error(ErrorKind::AdapterNotFound, "no adapter command configured");
    if (vp.width_px < kMinViewportEdge || vp.height_px < kMinViewportEdge) {
        throw Error(ErrorKind::EmptyViewport, "viewport is below 64 px");
    }
    const fs::path exe = resolve_executable(adapter.command[0]);

    util::TempDir work("cartoforge-adapter");
    const fs::path style_path = work.path() / "style.json";
    const fs::path data_dir = work.path() / "data";
    const fs::path out_path = work.path() / "map.png";
    const fs::path err_path = work.path() / "stderr.txt";
    const std::string serialized = style.serialize();
    util::write_atomic(style_path, serialized);
    if (!sprite.index.empty()) {
        util::write_atomic(work.path() / "sprite.png", sprite.atlas_png());
        util::write_atomic(work.path() / "sprite.json", sprite.index_json().dump(2) + "\n");
    }
    save_dataset(dataset, data_dir);

    std::vector<std::string> args = adapter.command;
    args[0] = exe.string();
    for (const std::string& a : {std::string("--style"), style_path.string(), std::string("--data"), data_dir.string(),
                                 std::string("--width"), std::to_string(vp.width_px), std::string("--height"),
                                 std::to_string(vp.height_px), std::string("--out"), out_path.string()}) {
        args.push_back(a);
    }
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, "/dev/null", O_WRONLY, 0);
    posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    pid_t pid = 0;
    const int rc = ::posix_spawn(&pid, exe.c_str(), &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) {
        throw Error(ErrorKind::AdapterNotFound, "cannot start adapter: " + std::string(std::strerror(rc)));
    }
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) throw Error(ErrorKind::AdapterFailed, "waitpid failed", -1);
    }
    std::string stderr_text;
    if (fs::exists(err_path)) stderr_text = util::read_text(err_path);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
    if (code != 0) {
        throw Error(ErrorKind::AdapterFailed, "adapter exited with status " + std::to_string(code), code, stderr_text);
    }
    if (!fs::exists(out_path)) {
        throw Error(ErrorKind::AdapterFailed, "adapter wrote no image", 0, stderr_text);
    }
    Image img = decode_image(util::read_bytes(out_path));
    if (img.width() != vp.width_px || img.height() != vp.height_px) {
        throw Error(ErrorKind::BadOutputSize, "adapter returned " + std::to_string(img.width()) + "x" +
                                                  std::to_string(img.height()) + " for a " +
                                                  std::to_string(vp.width_px) + "x" + std::to_string(vp.height_px) +
                                                  " viewport");
    }
    RenderedMap out;
    out.pixels = std::move(img);
    out.provenance = "external:" + (adapter.id.empty() ? exe.filename().string() : adapter.id);
    out.style_digest = util::sha256_hex(serialized);
    return out;
}

}  // namespace cartoforge::render
