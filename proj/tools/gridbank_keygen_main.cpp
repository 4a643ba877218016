// gridbank-keygen: provisions identities. Writes the key file and appends
// the public key to the registry; optionally marks the subject as an
// administrator.

#include "gridbank/identity.hpp"

#include "gridbank/errors.hpp"

#include "common.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace gridbank;

int main(int argc, char** argv)
{
    CLI::App app{"Generate a GridBank identity and register its public key"};
    std::string subject, out_file;
    std::string registry_file = tools::default_path("keys.reg");
    std::string admins_file;
    app.add_option("--subject", subject, "certificate name, e.g. CN=Alice,O=UWA")->required();
    app.add_option("--out", out_file, "identity key file to write")->required();
    app.add_option("--registry", registry_file, "key registry to append to")
        ->capture_default_str();
    app.add_option("--admins", admins_file, "also append the subject to this admin table");
    CLI11_PARSE(app, argc, argv);

    try {
        Identity identity = Identity::generate(subject);
        identity.save(out_file);

        std::ofstream registry(registry_file, std::ios::app);
        if (!registry)
            fail(Errc::IoError, "cannot append to " + registry_file);
        registry << identity.subject << '\t' << base64_encode(identity.public_key) << '\n';

        if (!admins_file.empty()) {
            std::ofstream admins(admins_file, std::ios::app);
            if (!admins)
                fail(Errc::IoError, "cannot append to " + admins_file);
            admins << identity.subject << '\n';
        }
        std::cerr << "wrote " << out_file << " and registered " << identity.subject << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
