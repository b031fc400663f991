#include "privreport/http_client.hpp"

#include <memory>

#ifdef PRIVREPORT_WITH_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "privreport/errors.hpp"

namespace privreport {

namespace {

struct ParsedUrl {
    bool https = false;
    std::string host;
    int port = 0;
    std::string path;
};

ParsedUrl parse_url(const std::string& url) {
    ParsedUrl parsed;
    std::string rest;
    if (url.rfind("http://", 0) == 0) {
        rest = url.substr(7);
        parsed.port = 80;
    } else if (url.rfind("https://", 0) == 0) {
        rest = url.substr(8);
        parsed.https = true;
        parsed.port = 443;
    } else {
        throw Error(ErrorCode::InvalidConfig, "endpoint \"" + url + "\" is not an http(s) URL");
    }

    std::size_t slash = rest.find('/');
    std::string authority = rest.substr(0, slash);
    parsed.path = slash == std::string::npos ? "/" : rest.substr(slash);

    std::size_t colon = authority.find(':');
    if (colon == std::string::npos) {
        parsed.host = authority;
    } else {
        parsed.host = authority.substr(0, colon);
        try {
            parsed.port = std::stoi(authority.substr(colon + 1));
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidConfig, "endpoint \"" + url + "\" has a bad port");
        }
    }
    if (parsed.host.empty()) {
        throw Error(ErrorCode::InvalidConfig, "endpoint \"" + url + "\" has no host");
    }
    return parsed;
}

}  // namespace

HttpResponse http_post_json(const std::string& url, const std::string& bearer_key,
                            const std::string& body) {
    ParsedUrl parsed = parse_url(url);

    std::unique_ptr<httplib::Client> client;
    if (parsed.https) {
#ifdef PRIVREPORT_WITH_TLS
        client = std::make_unique<httplib::Client>("https://" + parsed.host + ":" +
                                                   std::to_string(parsed.port));
#else
        throw Error(ErrorCode::InvalidConfig,
                    "endpoint \"" + url + "\" needs TLS, which this build lacks");
#endif
    } else {
        client = std::make_unique<httplib::Client>(parsed.host, parsed.port);
    }
    client->set_connection_timeout(10);
    client->set_read_timeout(60);

    httplib::Headers headers = {{"Authorization", "Bearer " + bearer_key}};
    auto result = client->Post(parsed.path, headers, body, "application/json");

    HttpResponse response;
    if (!result) {
        response.transport_error = httplib::to_string(result.error());
        return response;
    }
    response.status = result->status;
    response.body = result->body;
    return response;
}

}  // namespace privreport
