// gridbank-gsc: consumer-side payment module. `submit` runs the full
// job-submission flow against a provider; `account` mirrors the bank's
// account API with the stored identity.

#include "gridbank/gsc.hpp"

#include "gridbank/errors.hpp"

#include "common.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace gridbank;

namespace {

ConsumerConfig make_config(const std::string& identity_file, const std::string& keys,
                           const std::string& bank, const std::string& bank_subject,
                           std::shared_ptr<KeyRegistry>& registry_out)
{
    auto registry = std::make_shared<KeyRegistry>();
    registry->load_file(keys);
    registry_out = registry;

    ConsumerConfig config;
    config.identity = Identity::load(identity_file);
    config.bank_subject = bank_subject;
    config.bank_endpoint = bank;

    // the welcome message names the caller's own account
    WireClient probe = WireClient::connect_endpoint(bank, config.identity,
                                                    registry->lookup(bank_subject));
    config.account_id = AccountId::parse(probe.welcome().string_at("AccountID"));
    return config;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"GridBank payment module (consumer side)"};
    std::string bank = "127.0.0.1:7077";
    std::string bank_subject = "CN=GridBank,O=GridBank";
    std::string identity_file = tools::default_path("gsc.key");
    std::string keys = tools::default_path("keys.reg");
    app.add_option("--bank", bank, "bank endpoint host:port")->capture_default_str();
    app.add_option("--bank-subject", bank_subject, "bank certificate name")
        ->capture_default_str();
    app.add_option("--identity", identity_file, "consumer identity key file")
        ->capture_default_str();
    app.add_option("--keys", keys, "key registry file")->capture_default_str();
    app.require_subcommand(1);

    std::string job_file, budget;
    CLI::App* submit = app.add_subcommand("submit", "run the job-submission flow");
    submit->add_option("--job", job_file, "jobspec file (canonical text)")->required();
    submit->add_option("--budget", budget, "budget total (defaults to current balance)");

    std::string account_op, start, end, new_subject, new_org;
    CLI::App* account = app.add_subcommand("account", "mirror of the bank account API");
    account->add_option("op", account_op, "one of get|statement|update")->required();
    account->add_option("--start", start, "statement start date");
    account->add_option("--end", end, "statement end date");
    account->add_option("--subject", new_subject, "new certificate name (update)");
    account->add_option("--organization", new_org, "new organization name (update)");

    CLI11_PARSE(app, argc, argv);

    try {
        std::shared_ptr<KeyRegistry> registry;
        ConsumerConfig config = make_config(identity_file, keys, bank, bank_subject, registry);
        auto clock = std::make_shared<SystemClock>();
        PaymentModule pm(config, clock, registry);

        if (submit->parsed()) {
            std::ifstream in(job_file);
            if (!in)
                fail(Errc::ConfigError, "cannot read jobspec " + job_file);
            std::stringstream buf;
            buf << in.rdbuf();
            JobSpec job = JobSpec::from_value(Value::parse(buf.str()));

            Money total = budget.empty()
                              ? Money::parse(pm.account_passthrough("GetAccount", Value::map())
                                                 .at("Result")
                                                 .string_at("AvailableBalance"))
                              : Money::parse(budget);
            pm.set_budget(total);
            JobReport report = pm.submit_job(job);
            tools::print_value(report.to_value());
            return report.error.empty() ? 0 : 1;
        }

        Value params = Value::map();
        std::string op;
        if (account_op == "get") {
            op = "GetAccount";
        } else if (account_op == "statement") {
            op = "Statement";
            params.set("StartDate", start.empty() ? "1970-01-01T00:00:00Z" : start);
            params.set("EndDate", end.empty() ? "2100-01-01T00:00:00Z" : end);
        } else if (account_op == "update") {
            op = "UpdateAccount";
            params.set("CertificateName",
                       new_subject.empty() ? config.identity.subject : new_subject);
            params.set("OrganizationName", new_org);
        } else {
            fail(Errc::BadParameters, "unknown account op '" + account_op + "'");
        }
        tools::print_value(pm.account_passthrough(op, std::move(params)));
        return 0;
    } catch (const GridBankError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
