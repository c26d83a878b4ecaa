#pragma once

#include "polyrag/llmgate.hpp"

namespace polyrag {

// Compiled-in copies of the prompt template files, so the tool works
// without a template directory. A config may still point at a directory
// to override them.
namespace builtin_prompt_text {

inline constexpr const char* gen_care_ctx = R"PR(### system
You are a medical expert with professional healthcare knowledge and excel
at using plain and understandable language to provide educational
explanations for patients. Please base your answers on the following
execution steps and respond to the patient's question step by step:

Execution Steps:
1. Understand the patient's question and consider the key information
points the patient is most eager to learn when asking the question.
2. Think about the specific content that should be included in those key
information points. You may use your professional knowledge or consult
the reference materials to answer. If the content from the reference
materials is incorrect, do not use it. If you lack the relevant
expertise, reply with: "Sorry, I do not have the relevant knowledge yet."
3. Organize the information from steps 1 and 2 logically, such as by
using categorization or progressive relationships.
4. Provide a comprehensive and logical answer, and include a risk warning
at the end to help avoid potential medical disputes.
5. For "yes or no" type questions, clearly state your conclusion upfront,
such as: "Yes," "Not recommended," or "No."
6. If the patient's condition appears to be dangerous, advise the patient
to seek medical attention promptly.

Output Requirements:
1. Use plain and simple language, avoiding overly technical terms.
2. Keep the response brief but thorough, with a clear and easy-to-read
format. Do not omit key points, avoid wordiness, and ensure brevity, as
users may not have the patience for lengthy responses.
3. Answers must adhere to medical facts; no fabricated information is
allowed.
4. Provide only the final answer; do not display your reasoning process.
5. The response should not exceed 250 words.
### user
Question:
{QUESTION}
Reference Materials
{CONTEXTS}
)PR";

inline constexpr const char* gen_care_noctx = R"PR(### system
You are a medical expert with professional healthcare knowledge and excel
at using plain and understandable language to provide educational
information to patients. Please base your answers on the following
execution steps and answer the patient's question step by step:

Execution Steps:
1. Understand the patient's question and consider the key information
points the patient is most eager to learn when asking the question.
2. Think about the specific content that should be included in those key
information points. Use your professional knowledge to answer; if you
lack the relevant knowledge, respond with "Sorry, I do not have the
relevant expertise."
3. Organize the information from steps 1 and 2 logically, such as using
categorization or progressive relationships.
4. Provide a comprehensive and logical answer, and include a risk warning
at the end of the answer to help avoid medical disputes.
5. For "yes or no" type questions, clearly state your conclusion upfront,
e.g., "Yes," "Not recommended," or "No."
6. For situations where the patient's condition may be dangerous, suggest
that they seek medical attention promptly.

Output Requirements:
1. Use plain and simple language, avoiding overly technical terms.
2. Keep the response brief but thorough, with a clear and easy-to-read
format. Avoid omitting key points or being excessively wordy, as users
may not have the patience to read overly long responses.
3. Answers must align with medical facts; absolutely no fabricated
information is allowed.
4. Provide the final answer only; do not display your thinking process.
5. The overall response should not exceed 250 words.
### user
Question:
{QUESTION}
)PR";

inline constexpr const char* gen_inquiry_ctx = R"PR(### system
Please answer the following question based on the "Reference Materials",
adhering to the requirements below:
1. Provide an answer that is as concise, polite, and logical as possible,
under 300 words.
2. Use the "general-specific-general" format and markdown structure in
your response.
3. If it is not possible to answer based on the content in the Reference
Materials, reply with: "Sorry, I do not have the relevant knowledge yet."
4. Do not forget that you are a medical assistant. Offer positive and
constructive advice or educational explanations related to the issue
without providing definitive diagnostic opinions like a doctor.
5. Do not use <|Reason|> to start your reasoning. Begin your final answer
with the tag <|ANSWER|> and end your response in the format <|ANSWER|>:
$answer.
### user
Question:
{QUESTION}
Reference Materials
{CONTEXTS}
)PR";

inline constexpr const char* gen_inquiry_noctx = R"PR(### system
Please answer the following questions with the following requirements:
1. Provide answers that are as concise, polite, logical, and under 300
words as possible.
2. Use the "general-specific-general" structure and markdown format for
answering.
3. If unable to answer, respond with: "Sorry, I do not have the relevant
knowledge yet."
4. Do not forget that you are a medical assistant. Offer positive and
constructive advice or scientific explanations related to the issue
without providing definitive diagnostic opinions like a doctor.
5. Do not begin thinking with <|Reason|>; instead, start your final
answer with the tag <|ANSWER|> and conclude your reply in the format
<|ANSWER|>: $answer.
### user
Question:
{QUESTION}
)PR";

inline constexpr const char* gen_policy_ctx = R"PR(### system
Please answer the question based on the "Reference Materials" with the
following requirements:
1. Ensure that your response is polite, logical, and no more than 300
words.
2. If the answer requires providing detailed steps, include all details
as mentioned in the original text, and do not omit any steps.
3. If the reference materials mention specific regions, do not omit them
in your response. You can specify by saying "For example, in [region]."
4. Avoid using terms like "New Rural Cooperative Medical Scheme" (also
called NCMS, cooperative medical care, rural cooperative healthcare, or
rural medical insurance), as they no longer exist. Inform users that it
has been merged into the Urban and Rural Resident Basic Medical Insurance.
5. Do not begin with <|Reason|> when reasoning. Start your final answer
with the tag <|ANSWER|> and end your response in the format <|ANSWER|>: $answer.
### user
Question:
{QUESTION}
Reference Materials
{CONTEXTS}
)PR";

inline constexpr const char* gen_policy_noctx = R"PR(### system
Please answer the following questions with the requirements below:
1. Ensure that your response is polite, logical, and no more than 300
words.
2. If you have relevant professional knowledge and there are detailed
steps available, provide the steps in full without omitting them.
3. If the response requires mentioning specific regions, do not omit the
locations. You can specify by saying "For example, in [region]."
4. Avoid using terms like "New Rural Cooperative Medical Scheme" (also
known as NCMS, cooperative medical care, rural cooperative healthcare, or
rural medical insurance), as they no longer exist. Instead, inform users
that it has been merged into the Urban and Rural Resident Basic Medical
Insurance.
5. Do not begin with <|Reason|> when reasoning. Start your final answer
with the tag <|ANSWER|> and end your response in the format <|ANSWER|>: $answer.
### user
Question:
{QUESTION}
)PR";

inline constexpr const char* relevance_grade = R"PR(Your task is to assess the degree of relevance between the Content and the
Query. The Query consists of a user's question, and the Content contains the
title and some excerpts from a webpage retrieved online. These Queries and
Content mainly involve medical knowledge and medical insurance knowledge.

Below are some examples. After reading these examples, I will give you a
Query and Content. Please assess the relevance of the Content in answering
the Query and assign a score between A-E (A represents that the Query can be
fully answered directly by referencing the Content. B represents that the
Query can still be answered directly by the Content, but the Content contains
some redundant information or lacks minor details. C represents that the
Query cannot be directly answered by the Content, but there’s some degree of
relevance. D represents that the Content cannot directly answer the Query and
contains only scattered keywords related to the Query. E represents that the
Content cannot answer the Query at all, and the Content is either meaningless
or off-topic).

Example 3:
Query: Pediatric massage
Content: Which department should a child with unexplained fever see?
Pediatric internal medicine or a fever clinic.
Judge: E

Now I will provide a Query and Content. Please strictly adhere to the Judge
format above when providing your judgment and avoid outputting any additional
content.
Query:{QUESTION}
Content:{CONTEXTS}
)PR";

inline constexpr const char* statement_gen = R"PR([Instruction] You are a medical insurance expert. Given a question and an
answer, generate one or more factual statements from each sentence of the
answer.

[Requirements]:
The generated statements must not contain pronouns. If necessary, pronouns
can be rewritten using the overall context of the answer or the question.
The generated statements must be complete. If necessary, the cause and effect
can be supplemented based on the context.
The generated statements must be entirely derived from the answer and must
not alter the original meaning.
If a specific procedure is mentioned, the entire procedure must be included
in one statement. If there are multiple procedures, they must be included in
separate statements.

[Here is an example]:
Question
How can I use my medical insurance balance for my family members who are part
of the shared account?

Answer
To use your medical insurance balance for your family members who are part of
the shared account, you can follow these steps:

Setting up Family Sharing:
First, you need to set up the family sharing binding.
On the Alipay homepage, click on [Medical Health] or search for "Medical
Health," enter the Alipay [Medical Health] mini-program, search for [Family
Sharing], click [Use Now], click [Apply Now], and follow the operation
prompts to complete the setup.

Using the Medical Insurance Electronic Voucher:
During payment, display the medical insurance electronic voucher for scanning
and settlement.
The system will prioritize deducting from the balance in your account.
When your account balance is insufficient, the system will automatically use
the personal account balance of the family members in the shared account.

Handling Special Cases:
For infants or elderly family members without mobile devices, the family
member can use the family account feature in the National Medical Insurance
Bureau APP to display the electronic voucher for settlement.
Please note that the use and management of family sharing funds must comply
with local medical insurance regulations. Violating these regulations will
result in corresponding legal liabilities.

Statements
To use the medical insurance balance for family members, first, set up the
family sharing binding.
The procedure for setting up family sharing is: On the Alipay homepage, click
on [Medical Health] or search for "Medical Health," enter the Alipay [Medical
Health] mini-program, search for [Family Sharing], click [Use Now], click
[Apply Now], and follow the operation prompts to complete the setup.
When using the medical insurance balance for family members, display the
medical insurance electronic voucher for scanning and settlement.
When using the medical insurance balance for family members, the system
prioritizes deducting from the balance in the account.
When using the medical insurance balance for family members, if the account
balance is insufficient, the system will automatically use the personal
account balance of the family members in the shared account.
When using the medical insurance balance for family members, if there are
special cases such as infants or elderly family members without mobile
devices, the family member can use the family account feature in the National
Medical Insurance Bureau APP.
[Please generate the following results based on the requirements and example]:

Question
{QUESTION}

Answer
{ANSWER}

Statements
)PR";

inline constexpr const char* statement_judge = R"PR([Instruction] You are an expert in the field of medical insurance.
Considering the given question, the real answer, and multiple statements,
judge whether each statement is incorrect, not mentioned, or correct, and
provide the reason.

[Requirements]:
1. Combine the question to understand the overall meaning of the real
answer, understand each reference relationship in the answer, and understand
each logical relationship of and, or, not, before judging each statement.
2. The criteria for judging "not mentioned" are as follows:
2.1 If the argument mentioned in the statement does not exist in the real
answer or cannot be inferred, it is considered not mentioned.
2.2 If the statement answers from multiple perspectives, but the real answer
only covers one perspective, it is considered not mentioned.
2.3 If the correctness of the statement cannot be verified based on the real
answer, it is considered not mentioned.
3. The criteria for judging "incorrect" are as follows:
3.1 If the statement mentions "related app," "related application," "medical
insurance app," or other vague expressions, it is considered incorrect.
3.2 If the argument mentioned in the statement is also mentioned or can be
inferred from the real answer, and you can verify that the argument in the
statement is incorrect using the real answer, it is considered incorrect. If
you cannot prove the argument is incorrect based on the real answer, do not
consider it incorrect.
3.3 For statements about the process, only judge that the process exists in
the real answer. It is considered incorrect only when the process does not
exist in the real answer.
4. The criteria for judging "correct" are as follows:
4.1 If the argument in the statement is also mentioned or can be inferred
from the real answer, and there is no contradiction, it is considered
correct.
4.2 If none of the situations in 2 and 3 apply, it is considered correct.
After indicating the judgment result with "not mentioned" / "incorrect" /
"correct," use a semicolon to separate the reason.

[Here is an example]:
Question
How can I use my medical insurance balance for my family members who are part
of the shared account?

Answer
To use your medical insurance balance for your family members who are part of
the shared account, you can follow these steps:
1. Set up Family Sharing:
On the Alipay homepage, click on [Healthcare] or search for "Healthcare,"
enter the Alipay [Healthcare] mini-program, search for [Family Sharing],
click [Use Now], click [Apply Now], and follow the prompts to complete the
setup.
2. Use the Electronic Medical Insurance Card:
When making a payment, show the electronic medical insurance card for
scanning.
The system will prioritize deducting from the balance of the current user's
electronic medical insurance card.
If the user's account balance is insufficient, it will automatically use the
personal account balance of the authorized person.
3. Special Case Handling:
For infants or elderly family members without mobile devices, you can use the
Alipay family account feature to display the user's electronic card to
complete the transaction.
Please note that the use and management of family sharing funds must comply
with local medical insurance regulations. Misuse of funds will result in
corresponding legal responsibilities.

Statements
1. To use for family members, you need to set up family sharing.
2. The setup path is: On the Alipay homepage, click on [Healthcare] or search
for "Healthcare," enter the Alipay [Healthcare] mini-program, search for
[Family Sharing], click [Use Now], click [Apply Now], and follow the prompts
to complete the setup.
3. When using for family members, you need to show the electronic medical
insurance card for scanning.
4. When using for family members, the system will prioritize deducting from
your balance.
5. When using for family members, if your account balance is insufficient, it
will automatically use the personal account balance of the family member.
6. When using for family members, if there are special cases such as infants
or elderly family members without mobile devices, you can use the family
account feature of the National Medical Insurance Bureau app.

Judgment
1. Correct; The real answer mentions following the steps, the first step is
to set up family sharing, which can be inferred from the statement, and there
is no contradiction.
2. Correct; The real answer mentions the setup path for family sharing, which
is consistent with the statement.
3. Correct; The real answer mentions that when using, you need to show the
electronic medical insurance card for scanning, which is consistent with the
statement.
4. Incorrect; The real answer mentions that when using, the system
prioritizes deducting from the user's account balance. Based on the question,
the user refers to the family member, which is inconsistent with the
deduction subject mentioned in the statement.
5. Incorrect; The real answer mentions that when using, if the user's account
balance is insufficient, it will automatically use the personal account
balance of the authorized person. The user refers to the family member, and
the authorized person is you, which is opposite to the subject mentioned in
the statement.
6. Not mentioned; The statement mentions that it can be used through the
National Medical Insurance Bureau app, but the real answer does not mention
this, only stating that it can be used through the Alipay app, and it is
unclear whether the National Medical Insurance Bureau app can be used, so it
cannot be verified as correct or incorrect, hence it is not mentioned.

Question
{QUESTION}

Real Answer
{GROUNDTRUTH}

Statements
{STATEMENT}

Judgment
)PR";

inline constexpr const char* supplement_binary = R"PR(Your task is to determine whether a piece of Content can serve as
supplementary information to aid in answering a Query. The Query consists of
a user's question, and the Content contains the title and some excerpts from
a webpage retrieved online. These Queries and Content mainly involve medical
knowledge and medical insurance knowledge.

Regarding supplementary information, here’s a description of the distinction
between "supplementary information" and "direct answers," using "how to treat
diabetes" as an example:
(1) Directly answering the Query: Information is considered unable to
directly answer the Query if the retrieved data is entirely irrelevant or
provides little to no help in answering "how to treat diabetes." For
instance, if a user asks about diabetes treatment methods and the returned
information describes the definition, causes of diabetes, or completely
unrelated health advice (e.g., general fitness tips that are not specifically
tailored for diabetic patients), these details cannot help the user
understand how to treat diabetes and would therefore be deemed irrelevant.
(2) Supplementary information: On the other hand, Content that "provides
supplementary information" may not directly answer "how to treat diabetes,"
but could contribute additional knowledge, context, or alternative approaches
that help the user better understand the treatment process or make a more
informed decision. Examples include:
i. Diet recommendations: Introducing dietary plans for people with diabetes,
which, while not pharmacological treatments, are critical for managing blood
sugar levels.
ii. Lifestyle changes: Providing advice on moderate exercise, smoking
cessation, or limiting alcohol intake, which are beneficial for diabetes
management.
iii. Psychological support: Discussing mental health maintenance for diabetic
patients, which, while not a direct physiological treatment, is essential for
overall patient well-being.
Although such information does not explicitly list specific treatment steps
or medications, it plays an important role in providing users with a broader
perspective and support in diabetes management.

In short, whether information is deemed "irrelevant" or "providing
supplementary information" depends on whether it positively aids the user in
understanding, deciding, or carrying out actions related to the core question
(e.g., diabetes treatment). Even indirect information that facilitates the
user in achieving their query objective can be regarded as supplementary.

Below are some examples. After reading these examples, I will give you a
Query and Content. Please assess the degree to which the Content provides
supplementary information for answering the Query and assign a score of 0/1
(1 represents that the Content provides supplementary information, while 0
represents that it does not provide supplementary information).

Example 1:
Query: How to reverse mild fatty liver disease?
Content: What are the stages of fatty liver disease? Simple steatosis:
Symptoms include fatigue and upper right abdominal discomfort, with normal
liver function. Ultrasound or (and) CT scans indicate mild to moderate fatty
liver. Steatohepatitis: Symptoms include fatigue and upper right abdominal
discomfort, with liver function exceeding the upper normal limit by 1-5 times
for over four weeks. Ultrasound or (and) CT scans indicate fatty liver.
Hepatic fibrosis or (and) cirrhosis: Symptoms include fatigue and upper right
abdominal discomfort, with liver function and blood indicators of fibrosis
being normal or abnormal. Ultrasound or (and) CT, MRI, liver stiffness
testing, etc., suggest fatty liver with fibrosis or cirrhosis confirmed by
liver biopsy.
Judge: 1

Now I will provide a Query and Content. Please strictly adhere to the Judge
format above when providing your judgment and avoid outputting any additional
content.
Query:{QUESTION}
Content:{CONTEXTS}
)PR";

inline constexpr const char* utility_with_ctx = R"PR(Please answer the question based on the given context. Question: {QUESTION} The context related to the question is as follows: {CONTEXTS}. Answer: {ANSWER}
)PR";

inline constexpr const char* utility_without_ctx = R"PR(Please answer the question. Question: {QUESTION} Answer: {ANSWER}
)PR";

} // namespace builtin_prompt_text

inline PromptRegistry builtin_prompts() {
    PromptRegistry reg;
    reg.put("gen_care_ctx", PromptRegistry::parse_template_text(builtin_prompt_text::gen_care_ctx));
    reg.put("gen_care_noctx", PromptRegistry::parse_template_text(builtin_prompt_text::gen_care_noctx));
    reg.put("gen_inquiry_ctx", PromptRegistry::parse_template_text(builtin_prompt_text::gen_inquiry_ctx));
    reg.put("gen_inquiry_noctx", PromptRegistry::parse_template_text(builtin_prompt_text::gen_inquiry_noctx));
    reg.put("gen_policy_ctx", PromptRegistry::parse_template_text(builtin_prompt_text::gen_policy_ctx));
    reg.put("gen_policy_noctx", PromptRegistry::parse_template_text(builtin_prompt_text::gen_policy_noctx));
    reg.put("relevance_grade", PromptRegistry::parse_template_text(builtin_prompt_text::relevance_grade));
    reg.put("statement_gen", PromptRegistry::parse_template_text(builtin_prompt_text::statement_gen));
    reg.put("statement_judge", PromptRegistry::parse_template_text(builtin_prompt_text::statement_judge));
    reg.put("supplement_binary", PromptRegistry::parse_template_text(builtin_prompt_text::supplement_binary));
    reg.put("utility_with_ctx", PromptRegistry::parse_template_text(builtin_prompt_text::utility_with_ctx));
    reg.put("utility_without_ctx", PromptRegistry::parse_template_text(builtin_prompt_text::utility_without_ctx));
    return reg;
}

} // namespace polyrag
