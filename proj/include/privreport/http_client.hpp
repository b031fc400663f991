#pragma once

#include <string>

namespace privreport {

struct HttpResponse {
    int status = 0;
    std::string body;
    std::string transport_error;  // non-empty when the request never completed
};

// POST a JSON body with bearer auth to a full http(s) URL. Transport failures
// land in HttpResponse::transport_error instead of throwing so callers can
// drive their own retry policy. Throws Error(InvalidConfig) when the URL is
// not parseable or uses a scheme this build cannot reach.
HttpResponse http_post_json(const std::string& url, const std::string& bearer_key,
                            const std::string& body);

}  // namespace privreport
