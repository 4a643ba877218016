// gridbank-admin: issues signed administrator requests to a running bank:
// deposits, withdrawals, credit limits, transfer cancellation, account
// closure, plus account creation and expiry sweeps.

#include "gridbank/client.hpp"

#include "gridbank/errors.hpp"

#include "common.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace gridbank;

int main(int argc, char** argv)
{
    CLI::App app{"GridBank administration client"};
    std::string bank = "127.0.0.1:7077";
    std::string identity_file = tools::default_path("admin.key");
    app.add_option("--bank", bank, "bank endpoint host:port")->capture_default_str();
    app.add_option("--identity", identity_file, "admin identity key file")
        ->capture_default_str();
    app.require_subcommand(1);

    std::string account, destination, amount, subject, organization, start, end;
    std::int64_t transaction_id = 0;

    CLI::App* deposit = app.add_subcommand("deposit", "deposit funds into an account");
    deposit->add_option("account", account)->required();
    deposit->add_option("amount", amount)->required();

    CLI::App* withdraw = app.add_subcommand("withdraw", "withdraw funds from an account");
    withdraw->add_option("account", account)->required();
    withdraw->add_option("amount", amount)->required();

    CLI::App* credit = app.add_subcommand("credit-limit", "change an account's credit limit");
    credit->add_option("account", account)->required();
    credit->add_option("limit", amount)->required();

    CLI::App* cancel = app.add_subcommand("cancel", "cancel a transfer by transaction id");
    cancel->add_option("transaction", transaction_id)->required();

    CLI::App* close = app.add_subcommand("close", "close an account, residual balance to destination");
    close->add_option("account", account)->required();
    close->add_option("destination", destination)->required();

    CLI::App* create = app.add_subcommand("create-account", "open an account for a subject");
    create->add_option("subject", subject)->required();
    create->add_option("organization", organization);

    CLI::App* balance = app.add_subcommand("balance", "show an account record");
    balance->add_option("account", account)->required();

    CLI::App* statement = app.add_subcommand("statement", "account statement over a date range");
    statement->add_option("account", account)->required();
    statement->add_option("start", start)->required();
    statement->add_option("end", end)->required();

    app.add_subcommand("sweep", "release locks of expired instruments");
    app.add_subcommand("digest", "print the bank state digest");

    CLI11_PARSE(app, argc, argv);

    try {
        WireClient client = WireClient::connect_endpoint(bank, Identity::load(identity_file));
        Value params = Value::map();
        std::string op;
        if (deposit->parsed()) {
            op = "Deposit";
            params.set("AccountID", account).set("Amount", amount);
        } else if (withdraw->parsed()) {
            op = "Withdraw";
            params.set("AccountID", account).set("Amount", amount);
        } else if (credit->parsed()) {
            op = "SetCreditLimit";
            params.set("AccountID", account).set("CreditLimit", amount);
        } else if (cancel->parsed()) {
            op = "CancelTransfer";
            params.set("TransactionID", transaction_id);
        } else if (close->parsed()) {
            op = "CloseAccount";
            params.set("AccountID", account).set("DestinationAccountID", destination);
        } else if (create->parsed()) {
            op = "CreateAccount";
            params.set("CertificateName", subject);
            if (!organization.empty())
                params.set("OrganizationName", organization);
        } else if (balance->parsed()) {
            op = "GetAccount";
            params.set("AccountID", account);
        } else if (statement->parsed()) {
            op = "Statement";
            params.set("AccountID", account).set("StartDate", start).set("EndDate", end);
        } else if (app.get_subcommand("sweep")->parsed()) {
            op = "SweepExpired";
        } else {
            op = "StateDigest";
        }
        tools::print_value(client.call(op, std::move(params)));
        return 0;
    } catch (const GridBankError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
